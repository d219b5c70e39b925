"""Closed-form resource and error models.

Two unrelated quantities share the letter c in the literature: the CNOT
count per Bell pair (here ``gamma_resources``/``zero_error_resources``) and
the conditional-error constant of the logical CNOT (``ErrorModelParams.c``).
They live in separate types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# Bell pair preparation counts


def zero_error_resources(l: int) -> tuple[int, int]:
    """Preparations and CNOTs per logical Bell pair at level ``l`` without errors."""
    if l < 0:
        raise ValueError("level must be non-negative")
    p, c = 2, 1
    if l == 0:
        return p, c
    p, c = 8 * p, 8 * c + 12
    for k in range(1, l):
        p, c = 12 * p, 12 * c + 3**k * 20
    return p, c


@dataclass(frozen=True)
class ResourceRecursionParams:
    """Verification (``v``) and teleportation (``t``) success per level; ``t[1]`` is unused."""

    v: Mapping[int, float]
    t: Mapping[int, float]

    def __post_init__(self):
        for name in ("v", "t"):
            for l, x in getattr(self, name).items():
                if not 0 < x <= 1:
                    raise ValueError(f"{name}({l})={x} not in (0, 1]")


def gamma_resources(l: int, params: ResourceRecursionParams) -> tuple[float, float]:
    """Expected preparations and CNOTs per accepted Bell pair with retries."""
    if l < 0:
        raise ValueError("level must be non-negative")
    p, c = 2.0, 1.0
    if l == 0:
        return p, c
    try:
        v = params.v[1]
        p, c = 8 * p / v, 8 * c / v + 12
        for k in range(1, l):
            v, t = params.v[k + 1], params.t[k + 1]
            p, c = (6 * p / v + 6 * p) / t, ((6 * c + 3**k * 12) / v + 6 * c + 3**k * 8) / t
    except KeyError as e:
        raise ValueError(f"missing success probability for level {e.args[0]}") from None
    return p, c


# per gamma: level -> (v, t, p formula, preparations simulated, c formula, CNOTs simulated, pairs)
SIMULATED_TABLES: dict[float, dict[int, tuple]] = {
    0.01: {
        1: (0.940, None, 17.01, 17.01, 20.51, 21.01, 10345),
        2: (0.722, 0.247, 984.6, 1022.2, 1485.5, 1542.7, 2279),
        3: (0.602, 0.100, 1.58e5, 1.60e5, 2.40e5, 2.45e5, 409),
        4: (0.885, 0.205, 9.84e6, 9.63e6, 1.50e7, 1.48e7, 70),
        5: (0.900, 0.500, 2.49e8, 3.08e8, 3.80e8, 4.72e8, 2),
    },
    0.001: {
        1: (0.994, None, 16.10, 16.11, 20.05, 20.11, 10927),
        2: (0.970, 0.870, 225.6, 226.6, 351.2, 352.8, 2014),
        3: (0.957, 0.815, 3395.6, 3434.9, 5513.4, 5576.1, 401),
        4: (1.000, 0.970, 4.20e4, 4.67e4, 6.88e4, 7.61e4, 64),
        5: (1.000, 1.000, 5.04e5, 5.61e5, 8.27e5, 9.17e5, 2),
    },
    0.0001: {
        1: (0.999, None, 16.01, 16.02, 20.01, 20.02, 10987),
        2: (0.995, 0.984, 195.7, 204.9, 305.6, 317.2, 2155),
        3: (0.994, 0.982, 2398.6, 2556.0, 3929.9, 4158.1, 429),
        4: (1.000, 1.000, 2.88e4, 3.13e4, 4.77e4, 5.16e4, 66),
        5: (1.000, 1.000, 3.45e5, 3.92e5, 5.74e5, 6.50e5, 2),
    },
}


def table_params(gamma: float) -> ResourceRecursionParams:
    rows = SIMULATED_TABLES[gamma]
    return ResourceRecursionParams({l: r[0] for l, r in rows.items()}, {l: r[1] for l, r in rows.items() if r[1] is not None})


def simulated_cnots(gamma: float, l: int) -> float:
    return SIMULATED_TABLES[gamma][l][5]


# ---------------------------------------------------------------------------
# naive Bell-pair cost model rbell = P / (1 - gamma)^k


@dataclass(frozen=True)
class RbellParams:
    P: Mapping[int, float]
    k: Mapping[int, float]

    def rbell(self, l: int, gamma: float) -> float:
        return self.P[l] / (1 - gamma) ** self.k[l]


def fit_rbell(points: Sequence[tuple[float, float]], level: int | None = None, fix_intercept: bool = False) -> tuple[float, float]:
    """Least-squares fit of ``log r = log P - k log(1 - gamma)``; returns ``(P, k)``.

    With ``fix_intercept`` the constant is pinned to the error-free count of
    ``level`` and only ``k`` is fitted.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3 or len(np.unique(pts[:, 0])) < 2:
        raise ValueError("need at least three points at two or more distinct gammas")
    x = -np.log1p(-pts[:, 0])
    y = np.log(pts[:, 1])
    if fix_intercept:
        if level is None:
            raise ValueError("fixed intercept needs the level")
        P = float(zero_error_resources(level)[1])
        k = float(np.dot(x, y - math.log(P)) / np.dot(x, x))
        return P, k
    A = np.stack([np.ones_like(x), x], axis=1)
    (logP, k), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(math.exp(logP)), float(k)


def default_rbell(max_level: int = 12) -> RbellParams:
    """Per-level fits to the simulated tables, extrapolated past level 5.

    Beyond the fitted levels ``P`` follows the error-free recursion and ``k``
    grows by the ratio of the last two fitted levels.
    """
    P, k = {}, {}
    for l in range(1, 6):
        pts = [(g, SIMULATED_TABLES[g][l][5]) for g in sorted(SIMULATED_TABLES)]
        P[l], k[l] = fit_rbell(pts, l, fix_intercept=True)
    ratio = k[5] / k[4] if k[4] > 0 else 12.0
    for l in range(6, max_level + 1):
        P[l] = float(zero_error_resources(l)[1])
        k[l] = k[l - 1] * ratio
    return RbellParams(P, k)


# ---------------------------------------------------------------------------
# Fibonacci error model


def fibonacci(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@dataclass(frozen=True)
class ErrorModelParams:
    """Constants of ``p_d(l) = d(l) g^f(l+1)`` and ``p_c(l) = c(l) g^f(l+2)``."""

    d: Mapping[int, float]
    c: Mapping[int, float]
    D: Mapping[int, float] = field(default_factory=dict)
    C: Mapping[int, float] = field(default_factory=dict)


PUBLISHED_CONSTANTS = ErrorModelParams(
    d={1: 37.0, 2: 1.06e3, 3: 2.18e4, 4: 2.39e7},
    c={1: 35.2, 2: 4.47e3, 3: 7.95e6},
    D={1: 29.94, 2: 4.87, 3: 3.01},
    C={1: 3.43, 2: 1.69},
)


def transfer_ratios(params: ErrorModelParams, l: int) -> tuple[float, float]:
    """``D(l) = d(l+1)/c(l)`` and ``C(l) = c(l+1)/(d(l) c(l))``."""
    D = params.d[l + 1] / params.c[l]
    C = params.c[l + 1] / (params.d[l] * params.c[l]) if l + 1 in params.c else float("nan")
    return D, C


def transfer_constants(params: ErrorModelParams, to_level: int, base: int = 3, via: int = 2) -> ErrorModelParams:
    """Extend ``d, c`` past ``base`` using the level-``via`` transfer constants.

    A measured ``d`` above ``base`` is kept; ``c`` above ``base`` is always
    derived.
    """
    d = {l: v for l, v in params.d.items() if l <= base}
    c = {l: v for l, v in params.c.items() if l <= base}
    D, C = params.D[via], params.C[via]
    for l in range(base, to_level):
        d[l + 1] = params.d[l + 1] if l + 1 in params.d else D * c[l]
        c[l + 1] = C * d[l] * c[l]
    return ErrorModelParams(d, c, params.D, params.C)


def fibonacci_error_model(l: int, gamma: float, params: ErrorModelParams = PUBLISHED_CONSTANTS) -> tuple[float, float]:
    """Detected and conditional logical CNOT error at level ``l``."""
    return params.d[l] * gamma ** fibonacci(l + 1), params.c[l] * gamma ** fibonacci(l + 2)


def model_errors(l: int, gamma: float, params: ErrorModelParams = PUBLISHED_CONSTANTS) -> tuple[float, float]:
    """Measured constants up to level 3, transfer recursion above."""
    if l <= 3:
        return fibonacci_error_model(l, gamma, params)
    return fibonacci_error_model(l, gamma, transfer_constants(params, l))


# ---------------------------------------------------------------------------
# threshold


def _recursion_vanishes(gamma, d3, c3, D, C, levels):
    pd, pc = d3 * gamma**3, c3 * gamma**5
    for _ in range(levels):
        pd, pc = D * pc, C * pd * pc
        if pc == 0.0 or pd == 0.0:
            return True
        if pd > 1e6 or pc > 1e6:
            return False
    return pd < 1e-300 and pc < 1e-300


@dataclass(frozen=True)
class ThresholdResult:
    gamma: float
    lo: float
    hi: float
    trace: tuple


def threshold_from_recursion(d3=2.18e4, c3=7.95e6, D=4.87, C=1.69, lo=1e-4, hi=0.5, tol=1e-6, levels=1000) -> ThresholdResult:
    """Largest gamma whose transfer recursion (seeded at level 3) drives errors to 0."""
    if not _recursion_vanishes(lo, d3, c3, D, C, levels) or _recursion_vanishes(hi, d3, c3, D, C, levels):
        raise ValueError("bisection bracket does not straddle the threshold")
    trace = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok = _recursion_vanishes(mid, d3, c3, D, C, levels)
        trace.append((mid, ok))
        if ok:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, tuple(trace))


# ---------------------------------------------------------------------------
# work overhead


@dataclass(frozen=True)
class PcnotResult:
    feasible: bool
    level: int | None
    pcnot: float
    scan: tuple = ()


def optimize_pcnot(KQ: float, gamma: float, rbell: RbellParams | None = None, errmodel: ErrorModelParams = PUBLISHED_CONSTANTS, levels=range(1, 9)) -> PcnotResult:
    """Minimize ``rbell/2 / (1 - p_d/4)^KQ`` over levels with ``(1 - p_c/4)^KQ >= 2/3``."""
    rbell = rbell or default_rbell(max(levels))
    scan = []
    best = PcnotResult(False, None, math.inf)
    for l in levels:
        pd, pc = model_errors(l, gamma, errmodel)
        if pd >= 4 or pc >= 4:
            scan.append((l, math.inf, False))
            continue
        ok = KQ * math.log1p(-pc / 4) >= math.log(2 / 3)
        log_cost = math.log(0.5 * rbell.rbell(l, gamma)) - KQ * math.log1p(-pd / 4)
        cost = math.exp(log_cost) if log_cost < 700 else math.inf
        scan.append((l, cost, ok))
        if ok and cost < best.pcnot:
            best = PcnotResult(True, l, cost)
    return PcnotResult(best.feasible, best.level, best.pcnot, tuple(scan))


# ---------------------------------------------------------------------------
# pi/8 purification and the example computation


def pi8_purification(eps: float) -> tuple[float, float]:
    """Output error and success probability of one 15-to-1 purification round."""
    if not 0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 1/2]")
    a = 1 - 2 * eps
    e1 = (1 - 15 * a**7 + 15 * a**8 - a**15) / (2 * (1 + 15 * a**8))
    return e1, (1 + 15 * a**8) / 16


def pi8_overhead(p_detected: float, base_cnots: int = 201) -> float:
    if not 0 <= p_detected < 1:
        raise ValueError("probability must lie in [0, 1)")
    return base_cnots / (1 - p_detected) ** base_cnots


@dataclass(frozen=True)
class ComputationCost:
    tries: float
    success: float
    correct: float
    error: float
    total_cnots: float


def computation_cost(gates: int, overhead: float, p_d: float, p_c: float, phys_per_logical_cnot: float) -> ComputationCost:
    success = (1 - p_d) ** gates
    correct = (1 - p_c) ** gates
    tries = 1 / success
    return ComputationCost(tries, success, correct, 1 - correct, gates * overhead * tries * phys_per_logical_cnot)


@dataclass(frozen=True)
class BootstrapReport:
    gamma: float
    decoding: float
    cnot: float
    measurement: float
    effective: float
    bound: float
    feasible: bool


def bootstrap_feasibility(gamma: float, bound: float = 0.19) -> BootstrapReport:
    """Effective per-qubit error seen by the outer code: two decodings, one CNOT, two measurements."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    dec, cn, meas = 2 * gamma, gamma, 2 * 4 * gamma / 15
    eff = dec + cn + meas
    return BootstrapReport(gamma, dec, cn, meas, eff, bound, eff <= bound)


def scaleup(l: int, parallelism: str = "low", pcnot: float | None = None) -> float:
    """Physical qubits per logical qubit."""
    if l < 1:
        raise ValueError("level must be at least 1")
    base = 3 ** (l - 1) * 2
    if parallelism == "min":
        return base
    if parallelism == "low":
        return (1 + 2 * (l - 1)) * base
    if parallelism == "max":
        if pcnot is None:
            raise ValueError("maximum parallelism needs pcnot")
        return pcnot
    raise ValueError(f"unknown parallelism {parallelism!r}")


def low_gamma_comparison(gamma: float = 1e-4) -> list[dict]:
    """Per qubit and gate: half the simulated Bell-pair CNOTs and a quarter of p_d, levels 3 and 4."""
    rows = []
    for l in (3, 4):
        pd, pc = model_errors(l, gamma)
        rows.append({"level": l, "cnots_per_qubit": simulated_cnots(gamma, l) / 2, "detected_per_qubit": pd / 4, "conditional_per_qubit": pc / 4})
    return rows
