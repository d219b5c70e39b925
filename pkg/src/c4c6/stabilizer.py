"""Clifford simulation in graph-state normal form, shared across many trials.

A :class:`StabilizerState` keeps the ideal (error-free) stabilizer group of
every qubit that is still in use.  Qubits that have not interacted live in
separate components, each with its own small tableau.  Inside a component
row ``i`` is "owned" by local qubit ``i``: every qubit has a commuting
operator (X or Z) and exactly one row acts on it with a different non-identity
operator.

A :class:`TrialBatch` pairs one shared state with per-trial error vectors and
Pauli frames.  Because errors and frames are Pauli products they only flip
measurement signs, so one tableau serves every trial.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gf2 import CheckMatrix, PauliProduct, Syndrome

# commuting-operator codes
COMM_Z = 0
COMM_X = 1

# ---------------------------------------------------------------------------
# gate descriptions and the text circuit format

GATE_ARITY = {
    "PREP0": 1,
    "PREPX": 1,
    "MEASZ": 1,
    "MEASX": 1,
    "CNOT": 2,
    "H": 1,
    "S": 1,
    "PERM": None,
    "PAULI": 1,
}


@dataclass(frozen=True)
class GateOp:
    """One circuit step.  ``PAULI`` carries an injected error in ``pauli``."""

    kind: str
    targets: tuple[int, ...]
    pauli: str | None = None
    noisy: bool = True

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = GATE_ARITY[self.kind]
        if arity is not None and len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {len(self.targets)}")
        if self.kind == "CNOT" and self.targets[0] == self.targets[1]:
            raise ValueError("CNOT control and target coincide")
        if self.kind == "PERM" and sorted(self.targets) != sorted(set(self.targets)):
            raise ValueError("PERM targets must be distinct")
        if self.kind == "PAULI" and self.pauli not in ("X", "Y", "Z"):
            raise ValueError("PAULI needs one of X, Y, Z")

    def line(self) -> str:
        if self.kind == "PAULI":
            return f"PAULI {self.targets[0]} {self.pauli}"
        return " ".join([self.kind, *map(str, self.targets)])


def perm_mapping(targets: Sequence[int]) -> dict[int, int]:
    """``PERM t0 t1 ...`` sends the i-th smallest target to ``t_i``."""
    return dict(zip(sorted(targets), targets))


def dump_circuit(ops: Iterable[GateOp]) -> str:
    return "".join(op.line() + "\n" for op in ops)


def load_circuit(text: str) -> list[GateOp]:
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].upper()
        try:
            if kind == "PAULI":
                ops.append(GateOp("PAULI", (int(parts[1]),), pauli=parts[2].upper()))
            else:
                ops.append(GateOp(kind, tuple(int(p) for p in parts[1:])))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ops


# ---------------------------------------------------------------------------
# Pauli row arithmetic with signs (interleaved x/z columns)


def _phase_g(x1, z1, x2, z2):
    """Exponent of i picked up when multiplying single-qubit Paulis (vectorized)."""
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    return np.where(
        x1 & z1,
        z2 - x2,
        np.where(x1 & ~z1 & 1, z2 * (2 * x2 - 1), np.where(z1 & ~x1 & 1, x2 * (1 - 2 * z2), 0)),
    )


def _rowsum(rows, signs, targets, src):
    """``rows[t] <- rows[t] * rows[src]`` for each t in ``targets``, tracking signs."""
    if len(targets) == 0:
        return
    h = rows[targets]
    s = rows[src]
    g = _phase_g(s[0::2][None, :], s[1::2][None, :], h[:, 0::2], h[:, 1::2]).sum(axis=1)
    total = 2 * signs[targets].astype(np.int64) + 2 * int(signs[src]) + g
    signs[targets] = ((total % 4) // 2).astype(np.uint8)
    rows[targets] = h ^ s[None, :]


@dataclass
class _Component:
    qubits: list[int]
    rows: np.ndarray  # (k, 2k) uint8, row i owned by local qubit i
    signs: np.ndarray  # (k,) uint8
    comm: np.ndarray  # (k,) uint8 commuting operator per local qubit

    def local(self, q: int) -> int:
        return self.qubits.index(q)

    def restore(self) -> None:
        """Gauss-Jordan to graph normal form, keeping current commuting choices where possible."""
        k = len(self.qubits)
        rows, signs, comm = self.rows, self.signs, self.comm
        used = np.zeros(k, dtype=bool)
        owner = np.empty(k, dtype=np.int64)
        for q in range(k):
            col = 2 * q + (1 if comm[q] == COMM_X else 0)
            cand = np.nonzero(rows[:, col] & ~used)[0]
            if cand.size == 0:
                comm[q] ^= 1
                col = 2 * q + (1 if comm[q] == COMM_X else 0)
                cand = np.nonzero(rows[:, col] & ~used)[0]
                if cand.size == 0:  # cannot happen for a full-rank isotropic tableau
                    raise RuntimeError("tableau is not a valid stabilizer state")
            p = cand[0]
            used[p] = True
            owner[q] = p
            others = np.nonzero(rows[:, col])[0]
            _rowsum(rows, signs, others[others != p], p)
        self.rows = rows[owner]
        self.signs = signs[owner]

    def is_normal(self) -> bool:
        k = len(self.qubits)
        for q in range(k):
            col = 2 * q + (1 if self.comm[q] == COMM_X else 0)
            hits = np.nonzero(self.rows[:, col])[0]
            if hits.size != 1 or hits[0] != q:
                return False
        return True


@dataclass
class MeasureResult:
    """Ideal outcome of one measurement on the shared state.

    ``random`` is set when the outcome was not determined; ``flip`` is then the
    Pauli (global qubit ids, x bits, z bits) mapping the outcome-0 branch onto
    the outcome-1 branch.
    """

    outcome: int
    random: bool
    flip: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None


class StabilizerState:
    """Ideal stabilizer state over a dynamic set of qubit ids."""

    def __init__(self):
        self._comps: dict[int, _Component] = {}
        self._where: dict[int, int] = {}
        self._next_comp = 0

    # -- construction -----------------------------------------------------

    def add_qubit(self, q: int, basis: str = "Z", sign: int = 0) -> None:
        if q in self._where:
            raise ValueError(f"qubit {q} already present")
        if basis == "Z":
            rows = np.array([[0, 1]], dtype=np.uint8)
            comm = COMM_X
        elif basis == "X":
            rows = np.array([[1, 0]], dtype=np.uint8)
            comm = COMM_Z
        else:
            raise ValueError("basis must be 'Z' or 'X'")
        cid = self._next_comp
        self._next_comp += 1
        self._comps[cid] = _Component([q], rows, np.array([sign], dtype=np.uint8), np.array([comm], dtype=np.uint8))
        self._where[q] = cid

    def add_component(self, qubits: Sequence[int], rows: np.ndarray, signs: np.ndarray) -> None:
        """Add fresh qubits in the state stabilized by ``rows`` (interleaved, k x 2k)."""
        qubits = [int(q) for q in qubits]
        k = len(qubits)
        rows = np.asarray(rows, dtype=np.uint8) & 1
        if rows.shape != (k, 2 * k):
            raise ValueError("need k generators on k qubits")
        if any(q in self._where for q in qubits):
            raise ValueError("qubit already present")
        comp = _Component(qubits, rows.copy(), np.asarray(signs, dtype=np.uint8).copy(), np.full(k, COMM_X, dtype=np.uint8))
        comp.restore()
        cid = self._next_comp
        self._next_comp += 1
        self._comps[cid] = comp
        for q in qubits:
            self._where[q] = cid

    @property
    def qubits(self) -> list[int]:
        return sorted(self._where)

    @property
    def n(self) -> int:
        return len(self._where)

    def components(self) -> list[list[int]]:
        return [sorted(c.qubits) for c in self._comps.values()]

    def component_of(self, q: int) -> int:
        return self._where[q]

    def copy(self) -> "StabilizerState":
        return copy.deepcopy(self)

    def _comp(self, q: int) -> _Component:
        try:
            return self._comps[self._where[q]]
        except KeyError:
            raise IndexError(f"qubit {q} is not in the state") from None

    def merge(self, cids: Sequence[int]) -> int:
        """Join components into one block-diagonal tableau; returns the new id."""
        cids = list(dict.fromkeys(cids))
        if len(cids) == 1:
            return cids[0]
        parts = [self._comps.pop(c) for c in cids]
        qubits = [q for p in parts for q in p.qubits]
        k = len(qubits)
        rows = np.zeros((k, 2 * k), dtype=np.uint8)
        off = 0
        for p in parts:
            m = len(p.qubits)
            rows[off : off + m, 2 * off : 2 * (off + m)] = p.rows
            off += m
        comp = _Component(
            qubits,
            rows,
            np.concatenate([p.signs for p in parts]),
            np.concatenate([p.comm for p in parts]),
        )
        cid = self._next_comp
        self._next_comp += 1
        self._comps[cid] = comp
        for q in qubits:
            self._where[q] = cid
        return cid

    # -- gates --------------------------------------------------------------

    def h(self, q: int) -> None:
        c = self._comp(q)
        i = c.local(q)
        x = c.rows[:, 2 * i].copy()
        z = c.rows[:, 2 * i + 1].copy()
        c.signs ^= x & z
        c.rows[:, 2 * i] = z
        c.rows[:, 2 * i + 1] = x
        c.comm[i] ^= 1  # swapping X and Z keeps the form with the other commuting op

    def s(self, q: int) -> None:
        c = self._comp(q)
        i = c.local(q)
        x = c.rows[:, 2 * i]
        c.signs ^= x & c.rows[:, 2 * i + 1]
        c.rows[:, 2 * i + 1] ^= x
        if not c.is_normal():
            c.restore()

    def cnot(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("CNOT control and target coincide")
        cid = self.merge([self._where[a], self._where[b]]) if self._where.get(a) != self._where.get(b) else self._where[a]
        c = self._comps[cid]
        i, j = c.local(a), c.local(b)
        xa, za = c.rows[:, 2 * i], c.rows[:, 2 * i + 1]
        xb, zb = c.rows[:, 2 * j], c.rows[:, 2 * j + 1]
        c.signs ^= xa & zb & (xb ^ za ^ 1)
        c.rows[:, 2 * j] = xb ^ xa
        c.rows[:, 2 * i + 1] = za ^ zb
        if not c.is_normal():
            c.restore()

    def pauli(self, q: int, op: str) -> None:
        """Apply a Pauli to the ideal state (flips signs of anticommuting rows)."""
        c = self._comp(q)
        i = c.local(q)
        x = c.rows[:, 2 * i]
        z = c.rows[:, 2 * i + 1]
        if op == "X":
            c.signs ^= z
        elif op == "Z":
            c.signs ^= x
        elif op == "Y":
            c.signs ^= x ^ z
        else:
            raise ValueError(op)

    def relabel(self, mapping: dict[int, int]) -> None:
        """Rename qubit ids; ``mapping`` must permute its key set."""
        if sorted(mapping) != sorted(mapping.values()):
            raise ValueError("relabel must permute a set of qubits")
        where = {mapping.get(q, q): cid for q, cid in self._where.items()}
        for comp in self._comps.values():
            comp.qubits = [mapping.get(q, q) for q in comp.qubits]
        self._where = where

    # -- measurement ------------------------------------------------------------

    def measure(self, q: int, basis: str = "Z", outcome: int | None = None) -> MeasureResult:
        """Measure ``Z_q`` or ``X_q``.

        For a random outcome ``outcome`` selects the branch (default 0, the
        canonical branch).  For a determined outcome a conflicting request
        raises ``ValueError``.
        """
        c = self._comp(q)
        i = c.local(q)
        # column of rows that anticommute with the measured operator
        anti_col = 2 * i if basis == "Z" else 2 * i + 1
        anti = np.nonzero(c.rows[:, anti_col])[0]
        if anti.size == 0:
            sign = self._determined_sign(c, i, basis)
            if outcome is not None and outcome != sign:
                raise ValueError("requested outcome has probability zero")
            return MeasureResult(sign, False)
        p = anti[0]
        d_row = c.rows[p].copy()
        _rowsum(c.rows, c.signs, anti[1:], p)
        c.rows[p] = 0
        c.rows[p, 2 * i + (0 if basis == "X" else 1)] = 1
        c.signs[p] = 0 if outcome is None else outcome
        c.restore()
        qx = np.array([c.qubits[k] for k in range(len(c.qubits)) if d_row[2 * k]], dtype=np.int64)
        qz = np.array([c.qubits[k] for k in range(len(c.qubits)) if d_row[2 * k + 1]], dtype=np.int64)
        return MeasureResult(0 if outcome is None else outcome, True, (qx, qz, d_row))

    def _determined_sign(self, c: _Component, i: int, basis: str) -> int:
        # In normal form the measured operator is the product of the rows owning
        # the qubits where it differs from the commuting operator.
        op_comm = COMM_Z if basis == "Z" else COMM_X
        k = len(c.qubits)
        if c.comm[i] == op_comm:
            raise RuntimeError("inconsistent normal form")
        rows = c.rows[[i]].copy()
        signs = c.signs[[i]].copy()
        # single-qubit operator: only the owner row of qubit i contributes
        target = np.zeros(2 * k, dtype=np.uint8)
        target[2 * i + (1 if basis == "Z" else 0)] = 1
        if not np.array_equal(rows[0], target):
            raise RuntimeError("determined operator not in normal-form stabilizer")
        return int(signs[0])

    def is_product(self, q: int) -> bool:
        c = self._comp(q)
        i = c.local(q)
        row = c.rows[i]
        others = np.concatenate([row[: 2 * i], row[2 * i + 2 :]])
        col_hits = c.rows[:, 2 * i] | c.rows[:, 2 * i + 1]
        return not others.any() and col_hits.sum() == 1

    def discard(self, q: int) -> None:
        """Remove a qubit that is in a product state with everything else."""
        c = self._comp(q)
        if len(c.qubits) > 1 and not self.is_product(q):
            raise ValueError(f"qubit {q} is entangled and cannot be discarded")
        cid = self._where.pop(q)
        i = c.local(q)
        if len(c.qubits) == 1:
            del self._comps[cid]
            return
        keep = [k for k in range(len(c.qubits)) if k != i]
        cols = [2 * k + b for k in keep for b in (0, 1)]
        c.rows = c.rows[np.ix_(keep, cols)]
        c.signs = c.signs[keep]
        c.comm = c.comm[keep]
        c.qubits = [c.qubits[k] for k in keep]

    def split(self) -> None:
        """Break components into connected pieces (cheap bookkeeping, optional)."""
        for cid in list(self._comps):
            c = self._comps[cid]
            k = len(c.qubits)
            if k == 1:
                continue
            support = (c.rows[:, 0::2] | c.rows[:, 1::2]).astype(bool)
            label = list(range(k))

            def find(a):
                while label[a] != a:
                    label[a] = label[label[a]]
                    a = label[a]
                return a

            for r in range(k):
                qs = np.nonzero(support[r])[0]
                for t in qs[1:]:
                    ra, rb = find(qs[0]), find(t)
                    if ra != rb:
                        label[ra] = rb
            roots = {}
            for q in range(k):
                roots.setdefault(find(q), []).append(q)
            if len(roots) == 1:
                continue
            del self._comps[cid]
            for group in roots.values():
                cols = [2 * g + b for g in group for b in (0, 1)]
                sub = _Component(
                    [c.qubits[g] for g in group],
                    c.rows[np.ix_(group, cols)].copy(),
                    c.signs[group].copy(),
                    c.comm[group].copy(),
                )
                nid = self._next_comp
                self._next_comp += 1
                self._comps[nid] = sub
                for g in sub.qubits:
                    self._where[g] = nid

    # -- views -----------------------------------------------------------------

    def tableau(self, order: Sequence[int] | None = None) -> tuple[CheckMatrix, Syndrome]:
        """Full check matrix over ``order`` (default: sorted qubit ids) and its signs."""
        order = list(order) if order is not None else self.qubits
        pos = {q: k for k, q in enumerate(order)}
        n = len(order)
        rows, signs = [], []
        for c in self._comps.values():
            for r in range(len(c.qubits)):
                bits = 0
                for k, q in enumerate(c.qubits):
                    bits |= int(c.rows[r, 2 * k]) << (2 * pos[q])
                    bits |= int(c.rows[r, 2 * k + 1]) << (2 * pos[q] + 1)
                rows.append(PauliProduct(n, bits))
                signs.append(int(c.signs[r]))
        return CheckMatrix(n, tuple(rows)), Syndrome(tuple(signs))

    def check_normal_form(self) -> bool:
        return all(c.is_normal() for c in self._comps.values())


def init_state(n: int) -> StabilizerState:
    """``n`` qubits in ``|0>``; each starts as its own component."""
    if n < 1:
        raise ValueError("need at least one qubit")
    st = StabilizerState()
    for q in range(n):
        st.add_qubit(q, "Z")
    return st


def merge_components(state: StabilizerState, qubit_groups: Sequence[Sequence[int]]) -> StabilizerState:
    """Merge the components holding the listed qubit groups into one tableau.

    Each group names qubits of one existing component; groups must come from
    distinct components.
    """
    cids = []
    for g in qubit_groups:
        ids = {state.component_of(q) for q in g}
        if len(ids) != 1:
            raise ValueError("a group spans several components")
        cids.append(ids.pop())
    if len(set(cids)) != len(cids):
        raise ValueError("groups overlap the same component")
    state.merge(cids)
    return state


# ---------------------------------------------------------------------------
# exact outcome distribution by branching (single state, no batch)


def exact_distribution(n: int, ops: Sequence[GateOp]) -> dict[tuple[int, ...], float]:
    """Outcome-record probabilities of a circuit started in ``|0...0>``."""
    out: dict[tuple[int, ...], float] = {}

    def run(state: StabilizerState, k: int, record: tuple[int, ...], prob: float):
        while k < len(ops):
            op = ops[k]
            kind = op.kind
            if kind in ("MEASZ", "MEASX", "PREP0", "PREPX"):
                q = op.targets[0]
                basis = "X" if kind == "MEASX" else "Z"
                probe = state.copy().measure(q, basis)
                branches = [probe.outcome] if not probe.random else [0, 1]
                for m in branches:
                    branch = state.copy()
                    branch.measure(q, basis, outcome=m)
                    p = prob if not probe.random else prob / 2
                    if kind.startswith("PREP"):
                        if m:
                            branch.pauli(q, "X")
                        if kind == "PREPX":
                            branch.h(q)
                        run(branch, k + 1, record, p)
                    else:
                        run(branch, k + 1, record + (m,), p)
                return
            else:
                apply_op(state, op)
            k += 1
        out[record] = out.get(record, 0.0) + prob

    run(init_state(n), 0, (), 1.0)
    return out


def apply_op(state: StabilizerState, op: GateOp) -> None:
    """Apply a non-measurement op to a single ideal state."""
    kind, t = op.kind, op.targets
    if kind == "CNOT":
        state.cnot(t[0], t[1])
    elif kind == "H":
        state.h(t[0])
    elif kind == "S":
        state.s(t[0])
    elif kind == "PAULI":
        state.pauli(t[0], op.pauli)
    elif kind == "PERM":
        state.relabel(perm_mapping(t))
    elif kind in ("PREP0", "PREPX"):
        res = state.measure(t[0], "Z")
        if res.outcome:
            state.pauli(t[0], "X")
        if kind == "PREPX":
            state.h(t[0])
    else:
        raise ValueError(f"{kind} is not a unitary/prep op")


# ---------------------------------------------------------------------------
# batches of trials


class TrialBatch:
    """Shared ideal state plus per-trial error vectors, frames and alive flags.

    Arrays ``ex, ez`` (errors) and ``fx, fz`` (frames) have shape
    ``(capacity, trials)``; row ``q`` belongs to qubit id ``q``.
    """

    def __init__(self, trials: int, rng: np.random.Generator, capacity: int = 16, randomize: bool = True):
        if trials < 0:
            raise ValueError("negative trial count")
        self.trials = trials
        self.rng = rng
        self.randomize = randomize
        self.state = StabilizerState()
        self.ex = np.zeros((capacity, trials), dtype=bool)
        self.ez = np.zeros_like(self.ex)
        self.fx = np.zeros_like(self.ex)
        self.fz = np.zeros_like(self.ex)
        self.alive = np.ones(trials, dtype=bool)
        self._free: list[int] = list(range(capacity - 1, -1, -1))
        self.dead_injections = 0

    # -- allocation ------------------------------------------------------------

    def _grow(self, extra: int) -> None:
        old = self.ex.shape[0]
        new = max(2 * old, old + extra)
        for name in ("ex", "ez", "fx", "fz"):
            arr = getattr(self, name)
            grown = np.zeros((new, self.trials), dtype=bool)
            grown[:old] = arr
            setattr(self, name, grown)
        self._free.extend(range(new - 1, old - 1, -1))

    def alloc(self, k: int, basis: str = "Z") -> np.ndarray:
        """Fresh qubits in ``|0>`` (basis Z) or ``|+>`` (basis X), error-free."""
        if len(self._free) < k:
            self._grow(k - len(self._free))
        ids = np.array([self._free.pop() for _ in range(k)], dtype=np.int64)
        for q in ids:
            self.state.add_qubit(int(q), basis)
        self.ex[ids] = False
        self.ez[ids] = False
        self.fx[ids] = False
        self.fz[ids] = False
        return ids

    def install(self, generators: CheckMatrix, signs: Sequence[int] | None = None) -> np.ndarray:
        """Fresh error-free qubits in the stabilizer state given by ``generators``."""
        k = generators.n
        if len(generators) != k:
            raise ValueError("need a full set of generators")
        if len(self._free) < k:
            self._grow(k - len(self._free))
        ids = np.array([self._free.pop() for _ in range(k)], dtype=np.int64)
        signs = np.zeros(k, dtype=np.uint8) if signs is None else np.asarray(signs, dtype=np.uint8)
        self.state.add_component(ids, generators.matrix, signs)
        for name in ("ex", "ez", "fx", "fz"):
            getattr(self, name)[ids] = False
        return ids

    def discard(self, qubits: Iterable[int]) -> None:
        for q in qubits:
            self.state.discard(int(q))
            self._free.append(int(q))

    @property
    def n(self) -> int:
        return self.state.n

    # -- gates -------------------------------------------------------------------

    def cnot(self, controls: Sequence[int], targets: Sequence[int]) -> None:
        controls = np.asarray(controls, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        for a, b in zip(controls, targets):
            self.state.cnot(int(a), int(b))
        for X, Z in ((self.ex, self.ez), (self.fx, self.fz)):
            X[targets] ^= X[controls]
            Z[controls] ^= Z[targets]

    def h(self, qubits: Sequence[int]) -> None:
        qubits = np.asarray(qubits, dtype=np.int64)
        for q in qubits:
            self.state.h(int(q))
        for X, Z in ((self.ex, self.ez), (self.fx, self.fz)):
            tmp = X[qubits].copy()
            X[qubits] = Z[qubits]
            Z[qubits] = tmp

    def s(self, qubits: Sequence[int]) -> None:
        qubits = np.asarray(qubits, dtype=np.int64)
        for q in qubits:
            self.state.s(int(q))
        for X, Z in ((self.ex, self.ez), (self.fx, self.fz)):
            Z[qubits] ^= X[qubits]

    def relabel(self, mapping: dict[int, int]) -> None:
        """Noise-free relabeling of qubit ids (a permutation of the keys)."""
        self.state.relabel(mapping)
        src = np.array(list(mapping.keys()), dtype=np.int64)
        dst = np.array([mapping[q] for q in src], dtype=np.int64)
        for name in ("ex", "ez", "fx", "fz"):
            arr = getattr(self, name)
            moved = arr[src].copy()
            arr[dst] = moved

    # -- errors and frames ----------------------------------------------------------

    def inject(self, qubits: Sequence[int], x: np.ndarray, z: np.ndarray) -> None:
        """XOR error bits (shape ``(len(qubits), trials)``) into live trials."""
        qubits = np.asarray(qubits, dtype=np.int64)
        self.ex[qubits] ^= x & self.alive
        self.ez[qubits] ^= z & self.alive

    def inject_sparse(self, qubits: np.ndarray, trials: np.ndarray, x: np.ndarray, z: np.ndarray) -> None:
        """XOR single error bits at ``(qubits[i], trials[i])``; pairs must be distinct."""
        live = self.alive[trials]
        self.ex[qubits, trials] ^= x & live
        self.ez[qubits, trials] ^= z & live

    def inject_error(self, trial: int, e: PauliProduct, qubits: Sequence[int] | None = None) -> bool:
        """Multiply one trial's error vector by ``e``.  Returns False (no-op) for a dead trial."""
        qubits = list(qubits) if qubits is not None else self.state.qubits
        if e.n != len(qubits):
            raise ValueError("Pauli width does not match qubit list")
        if not self.alive[trial]:
            self.dead_injections += 1
            return False
        for k, q in enumerate(qubits):
            op = e.op(k)
            if op in ("X", "Y"):
                self.ex[q, trial] ^= True
            if op in ("Z", "Y"):
                self.ez[q, trial] ^= True
        return True

    def update_frame(self, qubits: Sequence[int], x: np.ndarray, z: np.ndarray) -> None:
        qubits = np.asarray(qubits, dtype=np.int64)
        self.fx[qubits] ^= x & self.alive
        self.fz[qubits] ^= z & self.alive

    def kill(self, mask: np.ndarray) -> None:
        self.alive &= ~mask

    # -- measurement ---------------------------------------------------------------

    def measure(self, qubits: Sequence[int], basis: str = "Z", flips: np.ndarray | None = None) -> np.ndarray:
        """Measure each qubit; returns outcomes relative to the Pauli frame.

        ``flips`` (same shape as the result) models classical readout error.
        Measured qubits stay allocated until :meth:`discard`.
        """
        qubits = np.asarray(qubits, dtype=np.int64)
        out = np.zeros((len(qubits), self.trials), dtype=bool)
        E = self.ex if basis == "Z" else self.ez
        F = self.fx if basis == "Z" else self.fz
        for k, q in enumerate(qubits):
            q = int(q)
            res = self.state.measure(q, basis)
            anti = E[q].copy()
            if res.random:
                if self.randomize:
                    m = self.rng.random(self.trials) < 0.5
                else:
                    m = anti.copy()
                apply = (m ^ anti) & self.alive
                qx, qz, _ = res.flip
                if apply.any():
                    self.ex[qx] ^= apply
                    self.ez[qz] ^= apply
                raw = m
            else:
                raw = anti ^ bool(res.outcome)
            out[k] = raw ^ F[q]
        if flips is not None:
            out ^= flips
        return out

    # -- structure -------------------------------------------------------------------

    def select(self, idx: np.ndarray) -> "TrialBatch":
        """New batch holding the chosen trials (copying the shared state)."""
        idx = np.asarray(idx, dtype=np.int64)
        nb = TrialBatch.__new__(TrialBatch)
        nb.trials = len(idx)
        nb.rng = self.rng
        nb.randomize = self.randomize
        nb.state = self.state.copy()
        # rows past the highest live qubit carry no data
        top = max(self.state.qubits, default=-1) + 1
        contiguous = len(idx) > 0 and idx[-1] - idx[0] + 1 == len(idx) and bool(np.all(idx[1:] > idx[:-1]))
        for name in ("ex", "ez", "fx", "fz"):
            arr = np.zeros((self.ex.shape[0], len(idx)), dtype=bool)
            src = getattr(self, name)[:top]
            arr[:top] = src[:, idx[0] : idx[-1] + 1] if contiguous else np.take(src, idx, axis=1)
            setattr(nb, name, arr)
        nb.alive = self.alive[idx].copy()
        nb._free = list(self._free)
        nb.dead_injections = 0
        return nb

    def residual(self, qubits: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Error times frame on the given qubits, the quantity observable outcomes depend on."""
        qubits = np.asarray(qubits, dtype=np.int64)
        return self.ex[qubits] ^ self.fx[qubits], self.ez[qubits] ^ self.fz[qubits]


def tensor(a: TrialBatch, b: TrialBatch) -> tuple[TrialBatch, dict[int, int]]:
    """Place two equally sized batches side by side.

    Qubit ids of ``b`` are renumbered; the returned mapping sends old ``b`` ids
    to ids in the new batch.  ``a`` ids are unchanged.
    """
    if a.trials != b.trials:
        raise ValueError("batches must hold the same number of trials")
    out = a.select(np.arange(a.trials))
    b_ids = b.state.qubits
    new_ids = out.alloc(len(b_ids))
    mapping = {old: int(new) for old, new in zip(b_ids, new_ids)}
    for q in new_ids:
        out.state.discard(int(q))
    _transplant(out.state, b.state, mapping)
    for name in ("ex", "ez", "fx", "fz"):
        getattr(out, name)[new_ids] = getattr(b, name)[b_ids]
    out.alive &= b.alive
    return out, mapping


def _transplant(dst: StabilizerState, src: StabilizerState, mapping: dict[int, int]) -> None:
    for comp in src._comps.values():
        cid = dst._next_comp
        dst._next_comp += 1
        new = _Component([mapping[q] for q in comp.qubits], comp.rows.copy(), comp.signs.copy(), comp.comm.copy())
        dst._comps[cid] = new
        for q in new.qubits:
            dst._where[q] = cid
