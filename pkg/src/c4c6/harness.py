"""Error-estimation experiments, confidence intervals and power-law fits.

Every experiment is split into fixed-size shards.  Shard ``i`` draws from
its own Philox stream keyed by ``(seed, i)`` and starts from the same pilot
acceptance estimates, so merged results do not depend on how shards are
distributed over workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import partial
from typing import Callable

import numpy as np
from scipy import stats as sps

from .noise import NoiseParams, noise_params
from .protocols import (
    FaultPlan,
    Noise,
    PrepContext,
    ResourceCount,
    bell_inplace,
    bell_pool,
    decode_block_bottom_up,
    fuse_cat,
    ideal_bell_pair,
    logical_gate,
    measure_block,
    physical_bell_pairs,
    subblocks,
    take_many,
    teleport_block,
    virtual_decode,
)
from .stabilizer import TrialBatch

# ---------------------------------------------------------------------------
# statistics


def ci68(k: int, n: int) -> tuple[float, float]:
    """Central Clopper-Pearson interval with 68% coverage."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"invalid counts k={k}, n={n}")
    a = 0.32
    lo = 0.0 if k == 0 else float(sps.beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(sps.beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def _rate(k: int, n: int) -> float:
    return k / n if n else 0.0


@dataclass
class ExperimentStats:
    """Counts of one experiment.

    ``eligible`` trials entered the measured step without a prior detection or
    logical error; ``detected_count`` of them were flagged and
    ``conditional_error_count`` of the remaining ``accepted`` were wrong.
    """

    trials: int = 0
    eligible: int = 0
    detected_count: int = 0
    conditional_error_count: int = 0
    cnot_sum: float = 0.0
    pair_count: int = 0
    prep_sum: float = 0.0
    meas_sum: float = 0.0
    attempt_sum: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def accepted(self) -> int:
        return self.eligible - self.detected_count

    @property
    def p_d(self) -> float:
        return _rate(self.detected_count, self.eligible)

    @property
    def p_c(self) -> float:
        return _rate(self.conditional_error_count, self.accepted)

    @property
    def ci68_d(self) -> tuple[float, float]:
        return ci68(self.detected_count, self.eligible) if self.eligible else (0.0, 1.0)

    @property
    def ci68_c(self) -> tuple[float, float]:
        return ci68(self.conditional_error_count, self.accepted) if self.accepted else (0.0, 1.0)

    @property
    def cnots_mean(self) -> float:
        return self.cnot_sum / self.pair_count if self.pair_count else 0.0

    def resources(self) -> dict:
        """Mean cost per consumed Bell pair."""
        k = self.pair_count or 1
        return {"preps": self.prep_sum / k, "cnots": self.cnot_sum / k, "measurements": self.meas_sum / k, "attempts": self.attempt_sum / k}

    def __add__(self, other: "ExperimentStats") -> "ExperimentStats":
        extra = dict(self.extra)
        for k, v in other.extra.items():
            extra[k] = extra.get(k, 0) + v
        vals = [getattr(self, f.name) + getattr(other, f.name) for f in fields(self) if f.name != "extra"]
        return ExperimentStats(*vals, extra=extra)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "eligible": self.eligible,
            "accepted": self.accepted,
            "detected_k": self.detected_count,
            "conditional_k": self.conditional_error_count,
            "pd": self.p_d,
            "pd_lo": self.ci68_d[0],
            "pd_hi": self.ci68_d[1],
            "pc": self.p_c,
            "pc_lo": self.ci68_c[0],
            "pc_hi": self.ci68_c[1],
            "cnots_mean": self.cnots_mean,
            **{k: v for k, v in self.extra.items()},
        }


def merge(parts) -> ExperimentStats:
    out = ExperimentStats()
    for p in parts:
        out = out + p
    return out


def intervals_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def chi2_constant_rate(k, n) -> float:
    """p-value of the hypothesis that counts ``k[i]`` of ``n[i]`` share one rate."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    if len(k) < 2:
        raise ValueError("need at least two steps")
    p = k.sum() / n.sum()
    if p in (0.0, 1.0):
        return 1.0
    stat = float((((k - n * p) ** 2) / (n * p * (1 - p))).sum())
    return float(sps.chi2.sf(stat, len(k) - 1))


# ---------------------------------------------------------------------------
# sharding


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(shard,))))


def pilot_rates(level: int, params: NoiseParams, ctx: PrepContext, seed: int, pairs: int = 64) -> dict:
    """Acceptance estimates used to size Bell-pair pools in every shard."""
    rates: dict = {}
    if level >= 1 and params.gamma > 0:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2**32 - 1,))))
        bell_pool(level, pairs, params, ctx, rng, rates, rounds=2)
    return rates


def run_sharded(shard_fn: Callable, trials: int, seed: int, shard_size: int, workers: int = 1) -> ExperimentStats:
    """Run ``shard_fn(n, rng)`` over fixed shards and merge the results."""
    if trials < 1:
        raise ValueError("trials must be positive")
    sizes = [min(shard_size, trials - s) for s in range(0, trials, shard_size)]
    jobs = [(i, n) for i, n in enumerate(sizes)]
    call = partial(_shard_call, shard_fn, seed)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(call, jobs))
    else:
        parts = [call(j) for j in jobs]
    return merge(parts)


def _shard_call(shard_fn, seed, job):
    i, n = job
    return shard_fn(n, shard_rng(seed, i))


# ---------------------------------------------------------------------------
# experiments


def _logical_bits(lx, lz, logical: str) -> np.ndarray:
    if logical == "L":
        return lx[0] | lz[0]
    return (lx | lz).any(axis=0)


def _pairs_for(pool, k: int, n: int) -> int:
    """Trials the pool can serve when each needs ``k`` pairs."""
    return min(n, pool.size // k)


def _stats(n, eligible, detected, wrong, pool=None, used=0, extra=None) -> ExperimentStats:
    u = pool.unit if pool is not None else ResourceCount()
    return ExperimentStats(
        n,
        int(eligible.sum()),
        int(detected.sum()),
        int(wrong.sum()),
        u.cnots * used,
        used,
        u.preps * used,
        u.measurements * used,
        u.attempts * used,
        extra or {},
    )


def gate_shard(gate: str, level: int, params: NoiseParams, ctx: PrepContext, rates: dict, logical: str, n: int, rng) -> ExperimentStats:
    """Two steps of (gate error model + teleportation) on error-free Bell references."""
    blocks = 2 if gate == "CNOT" else 1
    comp = ctx.compute()
    pool = bell_pool(level, 2 * blocks * n, params, ctx, rng, dict(rates))
    n = _pairs_for(pool, 2 * blocks, n)
    if n == 0:
        return ExperimentStats()
    batch = TrialBatch(n, rng, randomize=False)
    data = [ideal_bell_pair(batch, level)[0] for _ in range(blocks)]
    batch, pairs = take_many(pool, 2 * blocks, n, base=batch)
    noise = Noise(params, rng)

    def step(blks, prs):
        new, flag = logical_gate(gate, batch, noise, blks, prs, level, comp, apply_gate=False)
        wrong = np.zeros(n, dtype=bool)
        vflag = np.zeros(n, dtype=bool)
        for blk in new:
            lx, lz, f = virtual_decode(batch, blk, level, comp)
            wrong |= _logical_bits(lx, lz, logical)
            vflag |= f
        return new, flag, vflag, wrong

    data, f1, v1, w1 = step(data, pairs[:blocks])
    eligible = ~f1 & ~v1 & ~w1
    data, f2, v2, w2 = step(data, pairs[blocks:])
    detected = eligible & (f2 | v2)
    wrong = eligible & ~detected & w2
    return _stats(n, eligible, detected, wrong, pool, 2 * blocks * n)


def run_gate_error_experiment(gate, level, gamma, trials, ctx=PrepContext(), seed=0, shard_size=256, workers=1, logical="both") -> ExperimentStats:
    """Incremental detected and conditional error of one logical gate step."""
    if gate not in ("CNOT", "HAD"):
        raise ValueError(f"unsupported gate {gate!r}")
    if level < 1:
        raise ValueError("level must be at least 1")
    params = noise_params(gamma)
    rates = pilot_rates(level, params, ctx, seed)
    fn = partial(gate_shard, gate, level, params, ctx, rates, logical)
    return run_sharded(fn, trials, seed, shard_size, workers)


def prep_shard(level, params, ctx, rates, n, rng) -> ExperimentStats:
    """Verified encoded ``|00>`` from the cat protocol, scored by an ideal Z decode.

    Above level 1 the cat's subblocks are then teleported with error
    detection, the step every prepared block goes through next, so the
    measured error includes what that teleportation lets through.
    """
    prep = ctx.prep()
    per_cat = 4 if level == 1 else 3
    per_trial = per_cat if level == 1 else 2 * per_cat
    noise = Noise(params, rng)
    if level == 1:
        batch = TrialBatch(n, rng, randomize=False)
        a, b = physical_bell_pairs(batch, noise, 4)
        pairs = list(zip(a, b))
        pool = None
    else:
        pool = bell_pool(level - 1, per_trial * n, params, ctx, rng, dict(rates))
        n = _pairs_for(pool, per_trial, n)
        if n == 0:
            return ExperimentStats()
        batch, pairs = take_many(pool, per_trial, n)
    block, accept = fuse_cat(batch, noise, pairs[:per_cat], "Z", level - 1, prep)
    flag = np.zeros(n, dtype=bool)
    if level >= 2:
        out = []
        for sb, (pa, pb) in zip(subblocks(block), pairs[per_cat:]):
            flag |= teleport_block(batch, noise, sb, pa, pb, level - 1, prep)
            out.append(pb)
        block = np.concatenate(out)
    own = noise.take_counts()
    lx, _, vflag = virtual_decode(batch, block, level, ctx.compute(), use_x=True, use_z=False)
    detected = accept & (flag | vflag)
    wrong = accept & ~detected & lx.any(axis=0)
    st = _stats(n, accept, detected, wrong, pool, per_trial * n if pool is not None else 0)
    # one cat per trial: add its own operations (counted per trial)
    st.cnot_sum += own.cnots * n
    st.prep_sum += own.preps * n
    st.meas_sum += own.measurements * n
    st.attempt_sum += n
    st.pair_count = n
    return st


def run_prep_experiment(level, gamma, trials, ctx=PrepContext(), seed=0, shard_size=256, workers=1) -> ExperimentStats:
    params = noise_params(gamma)
    rates = pilot_rates(level - 1, params, ctx, seed) if level >= 2 else {}
    return run_sharded(partial(prep_shard, level, params, ctx, rates), trials, seed, shard_size, workers)


def meas_shard(level, params, ctx, rates, basis, n, rng) -> ExperimentStats:
    """One teleportation step on an ideal Bell pair, then a noisy transversal measurement."""
    comp = ctx.compute()
    pool = bell_pool(level, n, params, ctx, rng, dict(rates))
    n = _pairs_for(pool, 1, n)
    if n == 0:
        return ExperimentStats()
    batch = TrialBatch(n, rng, randomize=False)
    data = ideal_bell_pair(batch, level)[0]
    batch, pairs = take_many(pool, 1, n, base=batch)
    noise = Noise(params, rng)
    (data,), flag = logical_gate("I", batch, noise, [data], pairs, level, comp)
    lx, lz, vflag = virtual_decode(batch, data, level, comp)
    eligible = ~flag & ~vflag & ~(lx | lz).any(axis=0)
    bits, mflag = measure_block(batch, noise, data, level, basis, comp)
    detected = eligible & mflag
    wrong = eligible & ~mflag & bits.any(axis=0)
    return _stats(n, eligible, detected, wrong, pool, n)


def run_measurement_experiment(level, gamma, trials, ctx=PrepContext(), seed=0, shard_size=256, workers=1, basis="Z") -> ExperimentStats:
    params = noise_params(gamma)
    rates = pilot_rates(level, params, ctx, seed)
    return run_sharded(partial(meas_shard, level, params, ctx, rates, basis), trials, seed, shard_size, workers)


def decoding_shard(level, params, ctx, rates, n, rng) -> ExperimentStats:
    """Bottom-up decoding of one block of a Bell pair.

    Eligible trials have an error-free logical Bell pair (ideal decode of both
    blocks).  Detected: the decoding networks flag the block.  Wrong: the
    decoded pair disagrees with the partner block.  ``extra`` accumulates the
    injection score: measurement of each decoded qubit in a random basis
    with readout error ``e_m``.
    """
    comp = ctx.compute()
    pool = bell_pool(level, n, params, ctx, rng, dict(rates))
    n = _pairs_for(pool, 1, n)
    if n == 0:
        return ExperimentStats()
    batch, [(a, b)] = take_many(pool, 1, n)
    noise = Noise(params, rng)
    ax, az, af = virtual_decode(batch, a, level, comp)
    bx, bz, bf = virtual_decode(batch, b, level, comp)
    eligible = ~af & ~bf & ~((ax ^ bx) | (az ^ bz)).any(axis=0)
    data, flag = decode_block_bottom_up(batch, noise, a, level, ctx)
    rx, rz = batch.residual(data)
    ex, ez = rx ^ bx, rz ^ bz
    detected = eligible & flag
    wrong = eligible & ~flag & (ex | ez).any(axis=0)
    # injection: all trials whose decoded state is not flagged and whose partner is decodable
    ok = ~flag & ~bf
    zbasis = rng.random((2, n)) < 0.5
    readout = rng.random((2, n)) < params.e_m
    bad = (np.where(zbasis, ex, ez) ^ readout).any(axis=0)
    pz = np.where(ex, params.e_m, 1 - params.e_m)
    px = np.where(ez, params.e_m, 1 - params.e_m)
    f = (0.5 * (pz + px)).prod(axis=0)
    extra = {
        "injection_trials": int(ok.sum()),
        "injection_wrong": int((ok & bad).sum()),
        "injection_error_mass": float((1 - f)[ok].sum()),
    }
    return _stats(n, eligible, detected, wrong, pool, n, extra)


def run_decoding_experiment(level, gamma, trials, ctx=PrepContext(), seed=0, shard_size=256, workers=1) -> ExperimentStats:
    """Decoding error (p_c of the result) and injection statistics (in ``extra``)."""
    params = noise_params(gamma)
    rates = pilot_rates(level, params, ctx, seed)
    return run_sharded(partial(decoding_shard, level, params, ctx, rates), trials, seed, shard_size, workers)


def injection_summary(st: ExperimentStats) -> dict:
    n = st.extra.get("injection_trials", 0)
    k = st.extra.get("injection_wrong", 0)
    lo, hi = ci68(k, n) if n else (0.0, 1.0)
    return {
        "trials": n,
        "wrong": k,
        "error": _rate(k, n),
        "lo": lo,
        "hi": hi,
        "expected": st.extra.get("injection_error_mass", 0.0) / n if n else 0.0,
    }


def chain_shard(level, params, ctx, rates, steps, teleport, logical, n, rng) -> list[ExperimentStats]:
    comp = ctx.compute()
    batch = TrialBatch(n, rng, randomize=False)
    pool = None
    if teleport:
        pool = bell_pool(level, steps * n, params, ctx, rng, dict(rates))
        n2 = _pairs_for(pool, steps, n)
        if n2 == 0:
            return [ExperimentStats() for _ in range(steps)]
        if n2 < n:
            n = n2
            batch = TrialBatch(n, rng, randomize=False)
    data = ideal_bell_pair(batch, level)[0]
    pairs = []
    if teleport:
        batch, pairs = take_many(pool, steps, n, base=batch)
    noise = Noise(params, rng)
    clean = np.ones(n, dtype=bool)
    out = []
    for s in range(steps):
        noise.had_errors(batch, data)
        flag = np.zeros(n, dtype=bool)
        if teleport:
            (data,), flag = logical_gate("I", batch, noise, [data], [pairs[s]], level, comp)
        lx, lz, vflag = virtual_decode(batch, data, level, comp)
        wrong = _logical_bits(lx, lz, logical)
        det = clean & (flag | vflag)
        bad = clean & ~det & wrong
        out.append(_stats(n, clean, det, bad, pool, n if teleport else 0))
        clean &= ~(flag | vflag | wrong)
    return out


def run_chain_experiment(level, gamma, steps, teleport=True, trials=1000, ctx=PrepContext("ec"), seed=0, shard_size=256, workers=1, logical="both") -> list[ExperimentStats]:
    """Per-step incremental errors of repeated HAD error steps (step 1 is biased)."""
    if steps < 2:
        raise ValueError("need at least two steps")
    params = noise_params(gamma)
    rates = pilot_rates(level, params, ctx, seed) if teleport else {}
    fn = partial(chain_shard, level, params, ctx, rates, steps, teleport, logical)
    sizes = [min(shard_size, trials - s) for s in range(0, trials, shard_size)]
    call = partial(_shard_call, fn, seed)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(call, jobs))
    else:
        parts = [call(j) for j in jobs]
    return [merge(p[s] for p in parts) for s in range(steps)]


def chain_stationarity(per_step: list[ExperimentStats], first: int = 2) -> dict:
    """χ² p-values for constant detected and conditional rates over steps ``>= first``."""
    sel = per_step[first - 1 :]
    return {
        "p_detected": chi2_constant_rate([s.detected_count for s in sel], [s.eligible for s in sel]),
        "p_conditional": chi2_constant_rate([s.conditional_error_count for s in sel], [s.accepted for s in sel]),
    }


def _prep_and_teleport(batch, noise, level, ctx):
    comp = ctx.compute()
    data = ideal_bell_pair(batch, level)[0]
    a, b = bell_inplace(batch, noise, level, ctx.prep())
    (out,), flag = logical_gate("I", batch, noise, [data], [(a, b)], level, comp)
    lx, lz, vflag = virtual_decode(batch, out, level, comp)
    return batch.alive & ~flag & ~vflag, (lx | lz).any(axis=0)


_VARIANTS = {"CNOT": 15, "HAD": 3}


def fault_sweep(level: int = 1, ctx: PrepContext = PrepContext()) -> dict:
    """Every single fault at every site of Bell preparation plus one teleportation.

    Trial 0 is fault free; each other trial carries exactly one fault.
    Reports how many faulty trials were accepted and how many of those carry
    a logical error.
    """
    params = noise_params(0.0)
    dry = Noise(params, shard_rng(0, 0), FaultPlan({}), record=True)
    _prep_and_teleport(TrialBatch(1, shard_rng(0, 0), randomize=False), dry, level, ctx)
    faults: dict[int, list] = {}
    labels = [None]
    for site, kind in enumerate(dry.sites):
        for v in range(1, _VARIANTS.get(kind, 1) + 1):
            faults.setdefault(site, []).append((len(labels), v))
            labels.append((site, kind, v))
    batch = TrialBatch(len(labels), shard_rng(0, 1), randomize=False)
    noise = Noise(params, shard_rng(0, 2), FaultPlan(faults))
    accepted, wrong = _prep_and_teleport(batch, noise, level, ctx)
    bad = accepted & wrong
    return {
        "sites": len(dry.sites),
        "trials": len(labels) - 1,
        "fault_free_ok": bool(accepted[0] and not wrong[0]),
        "accepted": int(accepted[1:].sum()),
        "undetected_logical": int(bad[1:].sum()),
        "failures": [labels[i] for i in np.flatnonzero(bad) if i > 0],
    }


def _gate_network(gate, level, ctx, logical, batch, noise):
    """The two-step gate experiment with Bell pairs built in place (no retries)."""
    blocks = 2 if gate == "CNOT" else 1
    comp = ctx.compute()
    data = [ideal_bell_pair(batch, level)[0] for _ in range(blocks)]
    pairs = [bell_inplace(batch, noise, level, ctx.prep()) for _ in range(2 * blocks)]
    alive = batch.alive.copy()
    res = []
    for step in range(2):
        data, flag = logical_gate(gate, batch, noise, data, pairs[step * blocks : (step + 1) * blocks], level, comp, apply_gate=False)
        wrong = np.zeros(batch.trials, dtype=bool)
        vflag = np.zeros(batch.trials, dtype=bool)
        for blk in data:
            lx, lz, f = virtual_decode(batch, blk, level, comp)
            wrong |= _logical_bits(lx, lz, logical)
            vflag |= f
        res.append((flag | vflag, wrong))
    (d1, w1), (d2, w2) = res
    eligible = alive & ~d1 & ~w1
    return eligible & d2, eligible & ~d2 & w2


def _site_weights(kind: str, params: NoiseParams) -> tuple[int, float]:
    """Variant count and probability of each variant at one fault site."""
    return {
        "CNOT": (15, params.e_c / 15),
        "HAD": (3, params.e_h / 3),
        "prep": (1, params.e_p),
        "meas": (1, params.e_m),
    }[kind]


def leading_coefficients(gate: str = "CNOT", level: int = 1, ctx: PrepContext = PrepContext("ec"), logical: str = "both", chunk: int = 200_000) -> dict:
    """Exact lowest-order coefficients of the incremental gate errors by fault enumeration.

    ``p_d = d gamma + O(gamma^2)`` from all single faults and
    ``p_c = c gamma^2 + O(gamma^3)`` from all fault pairs; Bell pairs whose
    verification fails are treated as replaced by fault-free ones, as the
    retrying pools do to this order.
    """
    unit = noise_params(1.0)
    rng = shard_rng(0, 0)
    dry = Noise(unit, rng, FaultPlan({}), record=True)
    _gate_network(gate, level, ctx, logical, TrialBatch(1, rng, randomize=False), dry)
    faults = []  # (site, variant, weight / gamma)
    for site, kind in enumerate(dry.sites):
        nv, w = _site_weights(kind, unit)
        faults += [(site, v, w) for v in range(1, nv + 1)]
    site = np.array([f[0] for f in faults])
    var = np.array([f[1] for f in faults])
    wt = np.array([f[2] for f in faults])

    def run(members):
        """``members``: list of fault-index arrays, one per trial slot."""
        T = len(members[0])
        plan: dict[int, list] = {}
        for col in members:
            for t, f in enumerate(col):
                plan.setdefault(int(site[f]), []).append((t, int(var[f])))
        batch = TrialBatch(T, rng, randomize=False)
        return _gate_network(gate, level, ctx, logical, batch, Noise(unit, rng, FaultPlan(plan)))

    idx = np.arange(len(faults))
    det, bad = run([idx])
    d = float(wt[det].sum())
    single_bad = int(bad.sum())
    i, j = np.triu_indices(len(faults), k=1)
    keep = site[i] != site[j]
    i, j = i[keep], j[keep]
    c = 0.0
    for s in range(0, len(i), chunk):
        a, b = i[s : s + chunk], j[s : s + chunk]
        _, bad2 = run([a, b])
        c += float((wt[a] * wt[b])[bad2].sum())
    return {"d": d, "c": c, "sites": len(dry.sites), "faults": len(faults), "pairs": int(len(i)), "single_fault_undetected": single_bad}


# ---------------------------------------------------------------------------
# power-law fits


@dataclass(frozen=True)
class FitResult:
    constant: float
    exponent: float
    sd: float = 0.0
    sd_exponent: float = 0.0
    free_exponent: bool = False


def _loglik(logc, e, g, k, n):
    p = np.clip(np.exp(logc) * g**e, 1e-300, 1 - 1e-15)
    return float((k * np.log(p) + (n - k) * np.log1p(-p)).sum())


def fit_power_law(points, exponent: float | None = None, tol: float = 1e-12, max_iter: int = 10000) -> FitResult:
    """Fit ``p = c * gamma**e`` to binomial counts ``(gamma, k, n)``.

    Seeded by least squares on the log-log points with ``k >= 1``, then
    refined by gradient ascent on the likelihood (numerical derivatives,
    backtracking steps) until an accepted step improves it by less than
    ``tol``.  ``exponent=None`` fits the exponent as well.
    """
    pts = np.asarray([(float(g), float(k), float(n)) for g, k, n in points])
    if len(pts) == 0 or pts[:, 1].sum() == 0:
        raise ValueError("all counts are zero")
    g, k, n = pts.T
    nz = k > 0
    free = exponent is None
    lg, lp = np.log(g[nz]), np.log(k[nz] / n[nz])
    if free:
        if nz.sum() < 2:
            raise ValueError("free exponent needs two points with nonzero counts")
        e0, c0 = np.polyfit(lg, lp, 1)
    else:
        e0 = float(exponent)
        c0 = float(np.mean(lp - e0 * lg))
    if not free and len(g) == 1:
        return FitResult(float(k[0] / (n[0] * g[0] ** e0)), e0)
    # centering log gamma decorrelates intercept and slope
    mid = float(np.mean(np.log(g)))
    theta = np.array([c0 + e0 * mid, e0]) if free else np.array([c0 + e0 * mid])

    def f(t):
        e = t[1] if free else e0
        return _loglik(t[0] - e * mid, e, g, k, n)

    cur = f(theta)
    step = 1e-2
    for _ in range(max_iter):
        h = 1e-6 * np.maximum(np.abs(theta), 1.0)
        grad = np.array([(f(theta + hi) - f(theta - hi)) / (2 * hi[i]) for i, hi in enumerate(np.diag(h))])
        norm = np.linalg.norm(grad)
        if norm == 0:
            break
        while step > 1e-14:
            cand = theta + step * grad / norm
            val = f(cand)
            if val > cur:
                break
            step /= 2
        else:
            break
        gain = val - cur
        theta, cur = cand, val
        step *= 2
        if gain < tol:
            break
    e = float(theta[1]) if free else e0
    return FitResult(float(np.exp(theta[0] - e * mid)), e, free_exponent=free)


def resample_uncertainty(fit: FitResult, points, repetitions: int = 100, rng: np.random.Generator | None = None) -> FitResult:
    """Parametric bootstrap: redraw counts from the fitted curve and refit."""
    if repetitions < 100:
        raise ValueError("at least 100 repetitions")
    rng = rng or np.random.default_rng(0)
    g = np.array([p[0] for p in points], dtype=float)
    n = np.array([p[2] for p in points], dtype=np.int64)
    p = np.clip(fit.constant * g**fit.exponent, 0, 1)
    consts, exps = [], []
    for _ in range(repetitions):
        k = rng.binomial(n, p)
        if k.sum() == 0 or (fit.free_exponent and (k > 0).sum() < 2):
            continue
        r = fit_power_law(list(zip(g, k, n)), None if fit.free_exponent else fit.exponent)
        consts.append(r.constant)
        exps.append(r.exponent)
    sd = float(np.std(consts, ddof=1)) if len(consts) > 1 else 0.0
    sde = float(np.std(exps, ddof=1)) if fit.free_exponent and len(exps) > 1 else 0.0
    return FitResult(fit.constant, fit.exponent, sd, sde, fit.free_exponent)


def cnots_per_pair(level: int, gamma: float, pairs: int, ctx=PrepContext("ec"), seed=0) -> dict:
    """Bell-pair acceptance statistics and mean resources for one pool."""
    params = noise_params(gamma)
    rng = shard_rng(seed, 0)
    rates = pilot_rates(level, params, ctx, seed)
    pool = bell_pool(level, pairs, params, ctx, rng, rates)
    return {"pairs": pool.size, **pool.stats, **{f"unit_{k}": v for k, v in pool.unit.to_dict().items()}}
