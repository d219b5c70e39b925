"""Fault-tolerant building blocks: verified cats, Bell pairs, teleportation, decoding.

Everything runs on a :class:`TrialBatch` with canonical measurement branches,
so in a noise-free run every error vector and frame stays zero and all
reported outcomes are 0.  Outcome bits are therefore deviations caused by
errors, and a block's residual (error times frame) is exactly the Pauli that
separates it from the intended state.

A block is an ordered array of qubit ids.  Relabeling a block only reorders
that array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from functools import lru_cache

import numpy as np

from .codes import (
    block_size,
    cat_relabel,
    concatenated_check_matrix,
    decode_circuit,
    decode_tables,
    had_relabel,
)
from .gf2 import CheckMatrix
from .noise import NoiseParams
from .stabilizer import TrialBatch, tensor

# ---------------------------------------------------------------------------
# context and bookkeeping


@dataclass(frozen=True)
class PrepContext:
    """``mode`` is "postselect" (detect only) or "ec"; ``dl`` top levels use detection only."""

    mode: str = "postselect"
    dl: int = 1

    def __post_init__(self):
        if self.mode not in ("postselect", "ec"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.dl not in (0, 1):
            raise ValueError("dl must be 0 or 1")

    def correct_upto(self, top: int) -> int:
        """Highest C6 level at which erasure correction is used for a block at ``top``."""
        return top - self.dl if self.mode == "ec" else 0

    def prep(self) -> "PrepContext":
        return PrepContext(self.mode, 1)

    def compute(self) -> "PrepContext":
        return PrepContext(self.mode, 0)


@dataclass
class ResourceCount:
    preps: float = 0
    cnots: float = 0
    hads: float = 0
    measurements: float = 0
    attempts: float = 0

    def __add__(self, other: "ResourceCount") -> "ResourceCount":
        return ResourceCount(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def scaled(self, k: float) -> "ResourceCount":
        return ResourceCount(*(getattr(self, f.name) * k for f in fields(self)))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class FaultPlan:
    """Deterministic single faults: ``faults[site]`` lists ``(trial, variant)``.

    Variants: CNOT 1..15 (two-qubit Pauli index), HAD 1..3, prep/meas 1.
    """

    def __init__(self, faults: dict[int, list[tuple[int, int]]]):
        self.faults = faults


class Noise:
    """Draws gate errors and counts issued operations.

    With ``record`` set, the kind of every fault site is appended to
    ``sites`` in issue order.
    """

    def __init__(self, params: NoiseParams, rng: np.random.Generator, plan: FaultPlan | None = None, record: bool = False):
        self.params = params
        self.rng = rng
        self.plan = plan
        self.site = 0
        self.sites: list[str] | None = [] if record else None
        self.ops = ResourceCount()

    def take_counts(self) -> ResourceCount:
        out, self.ops = self.ops, ResourceCount()
        return out

    def _events(self, p: float, variants: int, k: int, T: int):
        """Fault events of the next ``k`` sites: arrays (site row, trial, variant >= 1)."""
        if self.plan is not None:
            rows, cols, var = [], [], []
            for j in range(k):
                for trial, variant in self.plan.faults.get(self.site + j, ()):
                    rows.append(j)
                    cols.append(trial)
                    var.append(variant)
            return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(var, dtype=np.int64)
        pos = bernoulli_positions(p, k * T, self.rng)
        var = self.rng.integers(1, variants + 1, size=len(pos)) if variants > 1 else np.ones(len(pos), dtype=np.int64)
        return pos // T, pos % T, var

    def _advance(self, kind: str, k: int) -> None:
        if self.sites is not None:
            self.sites.extend([kind] * k)
        self.site += k

    def prep(self, batch: TrialBatch, k: int, basis: str = "Z") -> np.ndarray:
        ids = batch.alloc(k, basis)
        r, t, _ = self._events(self.params.e_p, 1, k, batch.trials)
        self._advance("prep", k)
        one = np.ones(len(r), dtype=bool)
        if basis == "Z":
            batch.inject_sparse(ids[r], t, one, ~one)
        else:
            batch.inject_sparse(ids[r], t, ~one, one)
        self.ops.preps += k
        return ids

    def _two_qubit(self, batch, controls, targets) -> None:
        r, t, v = self._events(self.params.e_c, 15, len(controls), batch.trials)
        self._advance("CNOT", len(controls))
        a, b = v & 3, v >> 2
        batch.inject_sparse(controls[r], t, (a & 1).astype(bool), (a >> 1).astype(bool))
        batch.inject_sparse(targets[r], t, (b & 1).astype(bool), (b >> 1).astype(bool))

    def cnot(self, batch: TrialBatch, controls, targets) -> None:
        controls = np.asarray(controls, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        batch.cnot(controls, targets)
        self._two_qubit(batch, controls, targets)
        self.ops.cnots += len(controls)

    def cnot_errors(self, batch: TrialBatch, controls, targets) -> None:
        """Transversal-CNOT error model without the gate itself."""
        self._two_qubit(batch, np.asarray(controls, dtype=np.int64), np.asarray(targets, dtype=np.int64))

    def had(self, batch: TrialBatch, qubits) -> None:
        qubits = np.asarray(qubits, dtype=np.int64)
        batch.h(qubits)
        self.had_errors(batch, qubits)
        self.ops.hads += len(qubits)

    def had_errors(self, batch: TrialBatch, qubits) -> None:
        """HAD error model alone (the ideal gate is applied elsewhere or omitted)."""
        qubits = np.asarray(qubits, dtype=np.int64)
        r, t, v = self._events(self.params.e_h, 3, len(qubits), batch.trials)
        self._advance("HAD", len(qubits))
        batch.inject_sparse(qubits[r], t, (v & 1).astype(bool), (v >> 1).astype(bool))

    def measure(self, batch: TrialBatch, qubits, basis: str = "Z") -> np.ndarray:
        qubits = np.asarray(qubits, dtype=np.int64)
        k, T = len(qubits), batch.trials
        r, t, _ = self._events(self.params.e_m, 1, k, T)
        self._advance("meas", k)
        f = np.zeros((k, T), dtype=bool)
        f[r, t] = True
        out = batch.measure(qubits, basis, flips=f & batch.alive)
        self.ops.measurements += k
        return out


def bernoulli_positions(p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices in ``range(n)`` of successes of ``n`` independent Bernoulli(p) draws.

    Gaps between successes are geometric, so the cost scales with ``n * p``.
    """
    if p <= 0 or n == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    chunks = []
    last = -1
    while True:
        m = int(n * p * 1.1) + 16
        # capping gaps at n keeps the sum from overflowing for tiny p
        pos = last + np.cumsum(np.minimum(rng.geometric(p, size=m), n + 1))
        if pos[-1] >= n:
            chunks.append(pos[pos < n])
            break
        chunks.append(pos)
        last = int(pos[-1])
    return np.concatenate(chunks).astype(np.int64)


# ---------------------------------------------------------------------------
# hierarchical decision rule

# C6 supports (positions of the six pair-qubits)
_C6_CHECK_SUPPORT = ((0, 3, 4, 5), (0, 1, 2, 5))  # X checks and Z checks share supports
_C6_ZL, _C6_ZS = (2, 3, 5), (3, 4)  # Z logicals: x-coordinates
_C6_XL, _C6_XS = (1, 2), (0, 2, 3)  # X logicals: z-coordinates


@lru_cache(maxsize=None)
def _c6_erasure_table() -> np.ndarray:
    """``table[i, s]`` = 2-bit correction on pair ``i`` producing syndrome ``s``."""
    t = np.zeros((3, 4, 2), dtype=bool)
    for i in range(3):
        for v in range(4):
            bits = np.zeros(6, dtype=int)
            bits[2 * i] = v & 1
            bits[2 * i + 1] = v >> 1
            s = sum((int(bits[list(sup)].sum()) & 1) << j for j, sup in enumerate(_C6_CHECK_SUPPORT))
            t[i, s] = (bool(v & 1), bool(v >> 1))
    return t


def _parity(a: np.ndarray, idx) -> np.ndarray:
    out = a[:, idx[0]].copy()
    for i in idx[1:]:
        out ^= a[:, i]
    return out


def hierarchical_decide(
    x: np.ndarray,
    z: np.ndarray,
    level: int,
    ctx: PrepContext,
    use_x: bool = True,
    use_z: bool = True,
):
    """Decode per-qubit Pauli bits of a level-``level`` block.

    ``x, z`` have shape ``(n, T)`` in block order.  ``use_x`` means Z checks
    (which see X errors) are available, ``use_z`` the X checks.  Returns the
    logical bits ``lx, lz`` (shape ``(2, T)``, order L, S) of the corrected
    Pauli and the detected-uncorrectable flag.
    """
    n, T = x.shape
    if n != block_size(level):
        raise ValueError(f"expected {block_size(level)} qubits, got {n}")
    x = x.reshape(n // 4, 4, T)
    z = z.reshape(n // 4, 4, T)
    # C4 layer
    lx = np.stack([x[:, 0] ^ x[:, 2], x[:, 2] ^ x[:, 3]], axis=1)
    lz = np.stack([z[:, 0] ^ z[:, 1], z[:, 1] ^ z[:, 3]], axis=1)
    marked = np.zeros((n // 4, T), dtype=bool)
    if use_x:
        marked |= x[:, 0] ^ x[:, 1] ^ x[:, 2] ^ x[:, 3]
    if use_z:
        marked |= z[:, 0] ^ z[:, 1] ^ z[:, 2] ^ z[:, 3]
    table = _c6_erasure_table()
    limit = ctx.correct_upto(level)
    for k in range(2, level + 1):
        g = lx.shape[0] // 3
        x6 = lx.reshape(g, 6, T).copy()
        z6 = lz.reshape(g, 6, T).copy()
        m3 = marked.reshape(g, 3, T)
        count = m3.sum(axis=1)
        sx = sum(_parity(x6, sup).astype(np.int64) << j for j, sup in enumerate(_C6_CHECK_SUPPORT))
        sz = sum(_parity(z6, sup).astype(np.int64) << j for j, sup in enumerate(_C6_CHECK_SUPPORT))
        syn_bad = np.zeros((g, T), dtype=bool)
        if use_x:
            syn_bad |= sx != 0
        if use_z:
            syn_bad |= sz != 0
        if k <= limit:
            fix = count == 1
            for i in range(3):
                sel = fix & m3[:, i]
                if not sel.any():
                    continue
                if use_x:
                    cx = table[i][sx]  # (g, T, 2)
                    x6[:, 2 * i] ^= sel & cx[..., 0]
                    x6[:, 2 * i + 1] ^= sel & cx[..., 1]
                if use_z:
                    cz = table[i][sz]
                    z6[:, 2 * i] ^= sel & cz[..., 0]
                    z6[:, 2 * i + 1] ^= sel & cz[..., 1]
            marked = (count >= 2) | ((count == 0) & syn_bad)
        else:
            marked = (count >= 1) | syn_bad
        lx = np.stack([_parity(x6, _C6_ZL), _parity(x6, _C6_ZS)], axis=1)
        lz = np.stack([_parity(z6, _C6_XL), _parity(z6, _C6_XS)], axis=1)
    return lx[0], lz[0], marked[0]


@lru_cache(maxsize=None)
def logical_supports(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Canonical logical operators: x-support of X_L, X_S and z-support of Z_L, Z_S."""
    _, L = concatenated_check_matrix(level)
    xs = np.stack([L["X_L"].x, L["X_S"].x]).astype(bool)
    zs = np.stack([L["Z_L"].z, L["Z_S"].z]).astype(bool)
    return xs, zs


def apply_logical_frame(batch: TrialBatch, block: np.ndarray, lx: np.ndarray, lz: np.ndarray, level: int) -> None:
    """XOR the canonical logical Pauli with bits ``lx, lz`` into the block's frame."""
    if level == 0:
        batch.update_frame(block, lx[:1], lz[:1])
        return
    xs, zs = logical_supports(level)
    fx = np.logical_xor.reduce(xs[:, :, None] & lx[:, None, :], axis=0)
    fz = np.logical_xor.reduce(zs[:, :, None] & lz[:, None, :], axis=0)
    batch.update_frame(block, fx, fz)


def virtual_decode(batch: TrialBatch, block: np.ndarray, level: int, ctx: PrepContext, use_x=True, use_z=True):
    """Error-free decoding of a block's residual (what an ideal measurement would see)."""
    rx, rz = batch.residual(block)
    if level == 0:
        return rx[:1], rz[:1], np.zeros(batch.trials, dtype=bool)
    return hierarchical_decide(rx, rz, level, ctx, use_x, use_z)


# ---------------------------------------------------------------------------
# teleportation


def bell_measure_transversal(batch: TrialBatch, noise: Noise, block_in: np.ndarray, block_a: np.ndarray):
    """CNOT input -> a, X-measure input, Z-measure a.  Returns (g_x, g_z) bits."""
    block_in = np.asarray(block_in)
    block_a = np.asarray(block_a)
    if block_in.shape != block_a.shape:
        raise ValueError("blocks differ in size")
    noise.cnot(batch, block_in, block_a)
    ox = noise.measure(batch, block_in, "X")
    oz = noise.measure(batch, block_a, "Z")
    batch.discard(block_in)
    batch.discard(block_a)
    return oz, ox


def teleport_block(batch, noise, block, bell_a, bell_b, level, ctx):
    """Teleport ``block`` into ``bell_b``; returns the detected-uncorrectable flag."""
    gx, gz = bell_measure_transversal(batch, noise, block, bell_a)
    if level == 0:
        batch.update_frame(bell_b, gx, gz)
        return np.zeros(batch.trials, dtype=bool)
    lx, lz, flag = hierarchical_decide(gx, gz, level, ctx)
    apply_logical_frame(batch, bell_b, lx, lz, level)
    return flag


# ---------------------------------------------------------------------------
# verified cat states and Bell pairs (single batch, no retries)


def physical_bell_pairs(batch: TrialBatch, noise: Noise, k: int):
    a = noise.prep(batch, k, "X")
    b = noise.prep(batch, k, "Z")
    noise.cnot(batch, a, b)
    return a, b


def fuse_cat(batch, noise, pairs, kind: str, sub_level: int, ctx: PrepContext):
    """Ring-fuse Bell pairs ``[(a_i, b_i)]`` into an encoded ``|00>`` (Z) or ``|++>`` (X).

    Failing trials are killed.  Returns the output block and the accept mask.
    """
    r = len(pairs)
    a = [np.atleast_1d(p[0]) for p in pairs]
    b = [np.atleast_1d(p[1]) for p in pairs]
    if kind == "Z":
        noise.cnot(batch, np.concatenate(b), np.concatenate([a[(i + 1) % r] for i in range(r)]))
    else:
        noise.cnot(batch, np.concatenate([a[(i + 1) % r] for i in range(r)]), np.concatenate(b))
    measured = np.concatenate([a[(i + 1) % r] for i in range(r)])
    out = noise.measure(batch, measured, kind)
    batch.discard(measured)
    T = batch.trials
    size = len(a[0])
    flags = np.zeros(T, dtype=bool)
    m = []
    for i in range(r):
        bits = out[i * size : (i + 1) * size]
        if sub_level == 0:
            m.append(bits[:1])
            continue
        if kind == "Z":
            lbits, _, flag = hierarchical_decide(bits, np.zeros_like(bits), sub_level, ctx, True, False)
        else:
            _, lbits, flag = hierarchical_decide(np.zeros_like(bits), bits, sub_level, ctx, False, True)
        m.append(lbits)
        flags |= flag
    parity = np.logical_xor.reduce(np.stack(m), axis=0).any(axis=0)
    accept = ~flags & ~parity
    acc = np.zeros_like(m[0])
    zero = np.zeros_like(m[0])
    for j in range(1, r):
        acc = acc ^ m[j - 1]
        if kind == "Z":
            apply_logical_frame(batch, b[j], acc, zero, sub_level)
        else:
            apply_logical_frame(batch, b[j], zero, acc, sub_level)
    batch.kill(~accept)
    block = np.concatenate(b)
    if sub_level >= 1:
        block = relabel(block, cat_relabel(sub_level + 1, kind))
    return block, accept & batch.alive


def relabel(block: np.ndarray, perm) -> np.ndarray:
    """Position ``q`` of the block moves to ``perm[q]``."""
    out = np.empty_like(block)
    out[np.asarray(perm)] = block
    return out


def subblocks(block: np.ndarray) -> list[np.ndarray]:
    m = len(block) // 3
    return [block[i * m : (i + 1) * m] for i in range(3)]


def cat_inplace(batch, noise, level: int, kind: str, ctx: PrepContext):
    """Verified encoded cat built entirely inside ``batch`` (failures are killed)."""
    if level == 1:
        a, b = physical_bell_pairs(batch, noise, 4)
        return fuse_cat(batch, noise, list(zip(a, b)), kind, 0, ctx)[0]
    pairs = [bell_inplace(batch, noise, level - 1, ctx) for _ in range(3)]
    return fuse_cat(batch, noise, pairs, kind, level - 1, ctx)[0]


def combine_and_teleport(batch, noise, xcat, zcat, level, sub_pairs, ctx):
    """Transversal CNOT from the X cat to the Z cat, then teleport all six subblocks.

    ``sub_pairs`` are six level-(level-1) Bell pairs (unused for level 1).
    Returns the Bell pair blocks and the flag of any subblock teleportation.
    """
    noise.cnot(batch, xcat, zcat)
    flag = np.zeros(batch.trials, dtype=bool)
    if level == 1:
        return xcat, zcat, flag
    out = []
    k = 0
    for blk in (xcat, zcat):
        parts = []
        for sb in subblocks(blk):
            pa, pb = sub_pairs[k]
            k += 1
            flag |= teleport_block(batch, noise, sb, pa, pb, level - 1, ctx)
            parts.append(pb)
        out.append(np.concatenate(parts))
    batch.kill(flag)
    return out[0], out[1], flag


def bell_inplace(batch, noise, level: int, ctx: PrepContext):
    """Logical Bell pair built in one batch without retries (used for sweeps and checks)."""
    if level == 0:
        a, b = physical_bell_pairs(batch, noise, 1)
        return a, b
    xcat = cat_inplace(batch, noise, level, "X", ctx)
    zcat = cat_inplace(batch, noise, level, "Z", ctx)
    subs = [bell_inplace(batch, noise, level - 1, ctx) for _ in range(6)] if level >= 2 else []
    a, b, _ = combine_and_teleport(batch, noise, xcat, zcat, level, subs, ctx)
    return a, b


# ---------------------------------------------------------------------------
# Bell pair pools with retries and resource accounting


@dataclass
class BellPool:
    """Accepted Bell pairs, one per trial of ``batch``; ``unit`` is the mean cost per pair."""

    level: int
    batch: TrialBatch
    a: np.ndarray
    b: np.ndarray
    unit: ResourceCount
    stats: dict = field(default_factory=dict)
    cursor: int = 0

    @property
    def size(self) -> int:
        return self.batch.trials

    @property
    def remaining(self) -> int:
        return self.size - self.cursor

    def take(self, n: int) -> tuple[TrialBatch, np.ndarray, np.ndarray]:
        if n > self.remaining:
            raise ValueError("pool exhausted")
        idx = np.arange(self.cursor, self.cursor + n)
        self.cursor += n
        return self.batch.select(idx), self.a, self.b


def take_many(pool: BellPool, k: int, n: int, base: TrialBatch | None = None):
    """``k`` pairs side by side for ``n`` trials, optionally tensored onto ``base``."""
    pairs = []
    out = base
    for _ in range(k):
        sub, a, b = pool.take(n)
        if out is None:
            out = sub
            pairs.append((a.copy(), b.copy()))
        else:
            out, mp = tensor(out, sub)
            pairs.append((np.array([mp[int(q)] for q in a]), np.array([mp[int(q)] for q in b])))
    return out, pairs


def _compact(batch: TrialBatch) -> tuple[TrialBatch, np.ndarray]:
    idx = np.nonzero(batch.alive)[0]
    return batch.select(idx), idx


DEFAULT_RATES = {"v": 0.9, "t": 0.6}


def bell_pool(level: int, count: int, params: NoiseParams, ctx: PrepContext, rng: np.random.Generator, rates: dict | None = None, rounds: int = 6) -> BellPool:
    """At least ``count`` accepted level-``level`` Bell pairs.

    ``rates`` maps level to observed ``{"v": ..., "t": ...}`` and is updated in
    place; it sizes the attempt counts.  A short run is repeated with the
    refreshed rates (at most ``rounds`` times).
    """
    rates = {} if rates is None else rates
    pool = _bell_pool_once(level, count, params, ctx, rng, rates)
    for _ in range(rounds - 1):
        if pool.size >= count:
            break
        pool = _bell_pool_once(level, count, params, ctx, rng, rates)
    return pool


def _bell_pool_once(level, count, params, ctx, rng, rates) -> BellPool:
    ctx = ctx.prep()
    noise = Noise(params, rng)
    if level == 0:
        batch = TrialBatch(count, rng, capacity=2, randomize=False)
        a, b = physical_bell_pairs(batch, noise, 1)
        return BellPool(0, batch, a, b, noise.take_counts())
    est = rates.get(level, DEFAULT_RATES)
    slack = 1.15
    t_est = est.get("t", 1.0) if level >= 2 else 1.0
    n_top = int(math.ceil(count / max(t_est, 0.02) * slack)) + 2
    n_cat = int(math.ceil(n_top / max(est["v"], 0.02) * slack)) + 2
    per_cat = 4 if level == 1 else 3
    sub_count = 2 * per_cat * n_cat + (6 * n_top if level >= 2 else 0)
    sub = bell_pool(level - 1, sub_count, params, ctx, rng, rates, rounds=1)
    n_cat = min(n_cat, sub.remaining // (2 * per_cat + (6 if level >= 2 else 0)) or 1)
    cats = {}
    attempts = accepted = 0
    for kind in ("X", "Z"):
        batch, pairs = take_many(sub, per_cat, n_cat)
        noise.take_counts()
        if level == 1:
            pairs = [(a[0], b[0]) for a, b in pairs]
        block, _ = fuse_cat(batch, noise, pairs, kind, level - 1, ctx)
        own = noise.take_counts()
        batch, _ = _compact(batch)
        attempts += n_cat
        accepted += batch.trials
        unit = (sub.unit.scaled(per_cat) + own).scaled(n_cat / max(batch.trials, 1))
        cats[kind] = (batch, block, unit)
    v = accepted / max(attempts, 1)
    (bx, xblock, ux), (bz, zblock, uz) = cats["X"], cats["Z"]
    n = min(bx.trials, bz.trials)
    if level >= 2:
        n = min(n, sub.remaining // 6)
    if n == 0:
        empty = TrialBatch(0, rng, randomize=False)
        none = np.array([], dtype=np.int64)
        rates[level] = {"v": max(v, 0.02), "t": rates.get(level, DEFAULT_RATES)["t"]}
        return BellPool(level, empty, none, none, ResourceCount(), {"v": v, "t": 0.0})
    batch, mp = tensor(bx.select(np.arange(n)), bz.select(np.arange(n)))
    zblock = np.array([mp[int(q)] for q in zblock])
    subs = []
    if level >= 2:
        batch, subs = take_many(sub, 6, n, base=batch)
    noise.take_counts()
    a, b, _ = combine_and_teleport(batch, noise, xblock, zblock, level, subs, ctx)
    own = noise.take_counts()
    batch, _ = _compact(batch)
    t = batch.trials / n
    per_attempt = ux + uz + own + (sub.unit.scaled(6) if level >= 2 else ResourceCount())
    unit = per_attempt.scaled(n / max(batch.trials, 1))
    unit.attempts = n / max(batch.trials, 1)
    stats = {"v": v, "t": t, "cat_attempts": attempts, "cat_accepted": accepted, "combine_attempts": n, "pairs": batch.trials}
    rates[level] = {"v": max(v, 0.02), "t": max(t, 0.02)}
    return BellPool(level, batch, a, b, unit, stats)


def prepare_bell_pair(level: int, trials: int, params: NoiseParams, ctx: PrepContext, rng: np.random.Generator, rates=None) -> BellPool:
    """Accepted logical Bell pairs with mean resource counts per pair."""
    return bell_pool(level, trials, params, ctx, rng, rates)


def prepare_encoded_cat(level: int, kind: str, trials: int, params: NoiseParams, ctx: PrepContext, rng: np.random.Generator):
    """Verified cats in one batch; returns (batch, block, accept mask, ops per attempt)."""
    batch = TrialBatch(trials, rng, randomize=False)
    noise = Noise(params, rng)
    block = cat_inplace(batch, noise, level, kind, ctx.prep())
    return batch, block, batch.alive.copy(), noise.take_counts()


# ---------------------------------------------------------------------------
# error-free references


@lru_cache(maxsize=None)
def ideal_bell_generators(level: int) -> CheckMatrix:
    """Stabilizer of two level-``level`` blocks holding logical Bell pairs on L and S."""
    Q, L = concatenated_check_matrix(level)
    n = Q.n
    rows = [r.embed(2 * n, range(n)) for r in Q.rows] + [r.embed(2 * n, range(n, 2 * n)) for r in Q.rows]
    for name in ("X_L", "X_S", "Z_L", "Z_S"):
        rows.append(L[name].embed(2 * n, range(n)) * L[name].embed(2 * n, range(n, 2 * n)))
    return CheckMatrix(2 * n, tuple(rows))


def ideal_bell_pair(batch: TrialBatch, level: int) -> tuple[np.ndarray, np.ndarray]:
    ids = batch.install(ideal_bell_generators(level))
    n = block_size(level)
    return ids[:n], ids[n:]


# ---------------------------------------------------------------------------
# logical gates on data blocks


def teleport_many(batch, noise, blocks, pairs, level, ctx):
    flag = np.zeros(batch.trials, dtype=bool)
    out = []
    for blk, (pa, pb) in zip(blocks, pairs):
        flag |= teleport_block(batch, noise, blk, pa, pb, level, ctx)
        out.append(pb)
    return out, flag


def logical_gate(gate: str, batch, noise, blocks, pairs, level, ctx, apply_gate: bool = True):
    """Transversal gate (or only its error model) followed by teleportation of each operand.

    Returns the new blocks and the flag.  ``apply_gate=False`` applies only the
    physical error model, as in the reference-entanglement estimate.
    """
    if gate == "CNOT":
        c, t = blocks
        if apply_gate:
            noise.cnot(batch, c, t)
        else:
            noise.cnot_errors(batch, c, t)
    elif gate == "HAD":
        (d,) = blocks
        if apply_gate:
            noise.had(batch, d)
            blocks = [relabel(d, had_relabel(level))]
        else:
            noise.had_errors(batch, d)
    elif gate != "I":
        raise ValueError(f"unsupported logical gate {gate!r}")
    return teleport_many(batch, noise, blocks, pairs, level, ctx)


def measure_block(batch, noise, block, level, basis, ctx):
    """Noisy transversal measurement decoded to logical bits (L, S) and a flag."""
    out = noise.measure(batch, block, basis)
    batch.discard(block)
    zero = np.zeros_like(out)
    if basis == "Z":
        lx, _, flag = hierarchical_decide(out, zero, level, ctx, True, False)
        return lx, flag
    _, lz, flag = hierarchical_decide(zero, out, level, ctx, False, True)
    return lz, flag


# ---------------------------------------------------------------------------
# bottom-up decoding and state injection


def decode_block_bottom_up(batch, noise, block, level, ctx):
    """Decode a block into two physical qubits (L, S) with noisy networks.

    Returns the two qubit ids and the detected-uncorrectable flag.
    """
    T = batch.trials
    c4 = decode_circuit("C4")
    c6 = decode_circuit("C6")
    t6 = decode_tables("C6")
    limit = ctx.correct_upto(level)

    def run(circ, qubits):
        for op in circ.circuit.ops:
            if op.kind == "CNOT":
                noise.cnot(batch, [qubits[op.targets[0]]], [qubits[op.targets[1]]])
            elif op.kind == "H":
                noise.had(batch, [qubits[op.targets[0]]])
        anc = [qubits[q] for q in circ.x_ancillas + circ.z_ancillas]
        syn = noise.measure(batch, anc, "Z")
        batch.discard(anc)
        return syn, [qubits[circ.data[0]], qubits[circ.data[1]]]

    groups = [block[i : i + 4] for i in range(0, len(block), 4)]
    outs = []
    marks = []
    for g in groups:
        syn, data = run(c4, list(g))
        outs.append(data)
        marks.append(syn.any(axis=0))
    for k in range(2, level + 1):
        nouts, nmarks = [], []
        for i in range(0, len(outs), 3):
            qubits = outs[i] + outs[i + 1] + outs[i + 2]
            m3 = np.stack(marks[i : i + 3])
            syn, data = run(c6, qubits)
            count = m3.sum(axis=0)
            bad = syn.any(axis=0)
            if k <= limit:
                key = sum(syn[j].astype(np.int64) << j for j in range(syn.shape[0]))
                fx = np.zeros((2, T), dtype=bool)
                fz = np.zeros((2, T), dtype=bool)
                for p in range(3):
                    sel = (count == 1) & m3[p]
                    if not sel.any():
                        continue
                    lut_x = np.zeros((16, 2), dtype=bool)
                    lut_z = np.zeros((16, 2), dtype=bool)
                    for s, (dx, dz) in t6.table[p].items():
                        code = sum(b << j for j, b in enumerate(s))
                        lut_x[code] = dx
                        lut_z[code] = dz
                    fx |= (lut_x[key].T) & sel
                    fz |= (lut_z[key].T) & sel
                batch.update_frame(data, fx, fz)
                nmarks.append((count >= 2) | ((count == 0) & bad))
            else:
                nmarks.append((count >= 1) | bad)
            nouts.append(data)
        outs, marks = nouts, nmarks
    return np.array(outs[0]), marks[0]


def injection_fidelity_terms(rx: np.ndarray, rz: np.ndarray, e_m: float) -> np.ndarray:
    """Per-trial probability that both decoded qubits measure correctly, averaged over Z and X."""
    pz = np.where(rx, e_m, 1 - e_m)
    px = np.where(rz, e_m, 1 - e_m)
    per_qubit = 0.5 * (pz + px)
    return per_qubit.prod(axis=0)


def inject_state(level, trials, params, ctx, rng, rates=None):
    """Decode the first block of accepted Bell pairs and score the injected state.

    Returns a dict with accepted counts, detected fraction, mean injection
    error and the decoding error (decoded pair versus the second block).
    """
    pool = bell_pool(level, trials, params, ctx, rng, rates)
    n = pool.remaining
    if n == 0:
        return {"accepted": 0, "trials": 0}
    batch, a, b = pool.take(n)
    noise = Noise(params, rng)
    # baseline: error of the Bell pair itself under ideal decoding of both blocks
    ax, az, af = virtual_decode(batch, a, level, ctx.compute())
    bx, bz, bf = virtual_decode(batch, b, level, ctx.compute())
    base_ok = ~af & ~bf
    base_wrong = ((ax ^ bx) | (az ^ bz)).any(axis=0)
    data, flag = decode_block_bottom_up(batch, noise, a, level, ctx)
    rx, rz = batch.residual(data)
    ex = rx ^ bx
    ez = rz ^ bz
    ok = ~flag & ~bf
    wrong = (ex | ez).any(axis=0)
    fid = injection_fidelity_terms(ex, ez, params.e_m)
    return {
        "trials": int(n),
        "accepted": int(ok.sum()),
        "detected": int((~ok).sum()),
        "decode_wrong": int((wrong & ok).sum()),
        "baseline_accepted": int(base_ok.sum()),
        "baseline_wrong": int((base_wrong & base_ok).sum()),
        "injection_error_sum": float((1 - fid)[ok].sum()),
        "unit": pool.unit,
    }
