"""Depolarizing gate errors controlled by a single strength ``gamma``."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .gf2 import PauliProduct

# (x, z) bits of I, X, Z, Y
_OPS = ((0, 0), (1, 0), (0, 1), (1, 1))
_OP_CHARS = "IXZY"


@dataclass(frozen=True)
class NoiseParams:
    gamma: float
    e_c: float
    e_m: float
    e_p: float
    e_h: float

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    def to_dict(self) -> dict:
        return asdict(self)


def noise_params(gamma: float) -> NoiseParams:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma} outside [0, 1]")
    return NoiseParams(gamma, gamma, 4 * gamma / 15, 4 * gamma / 15, 4 * gamma / 5)


def two_qubit_pauli(index: int) -> PauliProduct:
    """Index 0..15 to a 2-qubit Pauli; 0 is the identity."""
    a, b = _OPS[index & 3], _OPS[index >> 2]
    return PauliProduct.from_xz((a[0], b[0]), (a[1], b[1]))


def sample_gate_error(kind: str, params: NoiseParams, rng: np.random.Generator) -> PauliProduct | bool:
    """One error draw: a Pauli for ``CNOT``/``HAD``, a flip bit for ``prep``/``meas``."""
    if kind == "CNOT":
        if rng.random() >= params.e_c:
            return PauliProduct.identity(2)
        return two_qubit_pauli(int(rng.integers(1, 16)))
    if kind == "HAD":
        if rng.random() >= params.e_h:
            return PauliProduct.identity(1)
        return PauliProduct.single(1, 0, "XYZ"[int(rng.integers(3))])
    if kind == "prep":
        return bool(rng.random() < params.e_p)
    if kind == "meas":
        return bool(rng.random() < params.e_m)
    raise ValueError(f"unknown gate kind {kind!r}")


# -- vectorized samplers used by the protocols --------------------------------


def cnot_errors(params: NoiseParams, rng: np.random.Generator, shape) -> tuple[np.ndarray, ...]:
    """Control x, control z, target x, target z error bits."""
    hit = rng.random(shape) < params.e_c
    idx = np.where(hit, rng.integers(1, 16, size=shape), 0)
    a, b = idx & 3, idx >> 2
    # op code -> bits: 1=X, 2=Z, 3=Y
    return (a & 1).astype(bool), (a >> 1).astype(bool), (b & 1).astype(bool), (b >> 1).astype(bool)


def had_errors(params: NoiseParams, rng: np.random.Generator, shape) -> tuple[np.ndarray, np.ndarray]:
    hit = rng.random(shape) < params.e_h
    op = np.where(hit, rng.integers(1, 4, size=shape), 0)
    return (op & 1).astype(bool), (op >> 1).astype(bool)


def flips(p: float, rng: np.random.Generator, shape) -> np.ndarray:
    return rng.random(shape) < p


# -- purified preparation and measurement networks ---------------------------


def _cnot_dist(e_c: float):
    yield (0, 0), 1.0 - e_c
    for i in range(1, 16):
        a, b = _OPS[i & 3], _OPS[i >> 2]
        yield (a[0], b[0]), e_c / 15


def _flip_dist(p: float):
    yield 0, 1.0 - p
    yield 1, p


def _sites(kind: str):
    if kind == "prep":
        return ["p", "p", "c", "m"]
    if kind == "meas-accept":
        return ["p", "c", "m", "m"]
    if kind == "meas-majority":
        return ["p", "p", "c", "c", "m", "m", "m"]
    raise ValueError(f"unknown network {kind!r}")


def _run_network(kind: str, faults) -> tuple[bool, bool]:
    """Classical X-error propagation; returns (accepted, output wrong)."""
    if kind == "prep":
        fa, fb, (cx, tx), fm = faults
        xa, xb = fa, fb
        xb ^= xa
        xa ^= cx
        xb ^= tx
        return (xb ^ fm) == 0, xa == 1
    if kind == "meas-accept":
        fp, (cx, tx), m1, m2 = faults
        xq, xa = 0, fp
        xa ^= xq
        xq ^= cx
        xa ^= tx
        r1, r2 = xq ^ m1, xa ^ m2
        return r1 == r2, r1 == 1
    fp1, fp2, (c1, t1), (c2, t2), m0, m1, m2 = faults
    xq, xa1, xa2 = 0, fp1, fp2
    xa1 ^= xq
    xq ^= c1
    xa1 ^= t1
    xa2 ^= xq
    xq ^= c2
    xa2 ^= t2
    votes = (xq ^ m0) + (xa1 ^ m1) + (xa2 ^ m2)
    return True, votes >= 2


def purified_network_joint(kind: str, gamma: float) -> tuple[float, float]:
    """Exact ``(P[accepted and wrong], P[accepted])`` by enumerating every fault pattern."""
    p = noise_params(gamma)
    dists = []
    for s in _sites(kind):
        if s == "c":
            dists.append(list(_cnot_dist(p.e_c)))
        else:
            dists.append(list(_flip_dist(p.e_p if s == "p" else p.e_m)))
    wrong = acc = 0.0
    for combo in itertools.product(*dists):
        w = 1.0
        for _, pr in combo:
            w *= pr
        if w == 0.0:
            continue
        ok, bad = _run_network(kind, [f for f, _ in combo])
        if ok:
            acc += w
            if bad:
                wrong += w
    return wrong, acc


def purified_network_error(kind: str, gamma: float) -> tuple[float, float]:
    """``(error probability given acceptance, acceptance probability)``."""
    wrong, acc = purified_network_joint(kind, gamma)
    return (wrong / acc if acc > 0 else 0.0), acc


def leading_coefficient(kind: str, h: float = 1e-4) -> float:
    """Linear coefficient of the accepted-and-wrong polynomial (Richardson step)."""
    f1 = purified_network_joint(kind, h)[0]
    f2 = purified_network_joint(kind, 2 * h)[0]
    return (4 * f1 - f2) / (2 * h)
