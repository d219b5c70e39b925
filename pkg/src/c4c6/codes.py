"""C4 and C6, their concatenation, encoded gates and decoding networks.

Inside a block the qubit order follows the operator strings.  A level-l block
(l >= 2) is three level-(l-1) subblocks; C6 qubits ``2i`` and ``2i + 1`` are
the L and S qubits of subblock ``i``.

Logical maps on a qubit pair that are linear over GF(2) (swap, CNOT and their
products) act on the X part by a 2x2 matrix ``A`` and on the Z part by the
inverse transpose.  On these codes every such map, and HAD, can be realized by
relabeling physical qubits (plus transversal physical gates for HAD).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .gf2 import CheckMatrix, PauliProduct, in_span, inverse, parse_pauli, solve, symplectic_commutes
from .stabilizer import GateOp, dump_circuit, load_circuit

# ---------------------------------------------------------------------------
# code definitions


@dataclass(frozen=True)
class CodeSpec:
    name: str
    n: int
    checks: CheckMatrix
    logical_ops: dict

    @property
    def x_checks(self) -> list[PauliProduct]:
        return [r for r in self.checks if not r.z.any()]

    @property
    def z_checks(self) -> list[PauliProduct]:
        return [r for r in self.checks if not r.x.any()]


_CODES = {
    "C4": (["XXXX", "ZZZZ"], {"X_L": "XXII", "Z_L": "ZIZI", "X_S": "IXIX", "Z_S": "IIZZ"}),
    "C6": (
        ["XIIXXX", "XXXIIX", "ZIIZZZ", "ZZZIIZ"],
        {"X_L": "IXXIII", "Z_L": "IIZZIZ", "X_S": "XIXXII", "Z_S": "IIIZZI"},
    ),
}


@lru_cache(maxsize=None)
def code_spec(name: str) -> CodeSpec:
    try:
        checks, logicals = _CODES[name]
    except KeyError:
        raise ValueError(f"unknown code {name!r}; expected C4 or C6") from None
    Q = CheckMatrix.from_strings(checks)
    return CodeSpec(name, Q.n, Q, {k: parse_pauli(v) for k, v in logicals.items()})


def block_size(level: int) -> int:
    if level < 1:
        raise ValueError("level must be at least 1 (level 0 is a physical qubit)")
    return 4 * 3 ** (level - 1)


@dataclass(frozen=True)
class BlockTree:
    level: int
    start: int
    children: tuple["BlockTree", ...] = ()

    @property
    def size(self) -> int:
        return block_size(self.level)

    @property
    def physical_indices(self) -> range:
        return range(self.start, self.start + self.size)


def block_tree(level: int, start: int = 0) -> BlockTree:
    if level == 1:
        return BlockTree(1, start)
    m = block_size(level - 1)
    return BlockTree(level, start, tuple(block_tree(level - 1, start + i * m) for i in range(3)))


# ---------------------------------------------------------------------------
# concatenated stabilizers


def _substitute(p6: PauliProduct, subs: Sequence[dict[str, PauliProduct]], n: int) -> PauliProduct:
    """Replace each C6 qubit's operator by the matching subblock logical."""
    out = PauliProduct.identity(n)
    for q in range(6):
        op = p6.op(q)
        if op == "I":
            continue
        which = "L" if q % 2 == 0 else "S"
        logs = subs[q // 2]
        if op in ("X", "Y"):
            out = out * logs["X_" + which]
        if op in ("Z", "Y"):
            out = out * logs["Z_" + which]
    return out


@lru_cache(maxsize=None)
def concatenated_check_matrix(level: int) -> tuple[CheckMatrix, dict[str, PauliProduct]]:
    """All checks of a level-``level`` block and its logical operators."""
    if level < 1:
        raise ValueError("level must be at least 1")
    if level == 1:
        c4 = code_spec("C4")
        return c4.checks, dict(c4.logical_ops)
    sub_q, sub_l = concatenated_check_matrix(level - 1)
    m = sub_q.n
    n = 3 * m
    rows = []
    subs = []
    for i in range(3):
        pos = list(range(i * m, (i + 1) * m))
        rows += [r.embed(n, pos) for r in sub_q.rows]
        subs.append({k: v.embed(n, pos) for k, v in sub_l.items()})
    c6 = code_spec("C6")
    rows += [_substitute(r, subs, n) for r in c6.checks]
    logicals = {k: _substitute(v, subs, n) for k, v in c6.logical_ops.items()}
    return CheckMatrix(n, tuple(rows)), logicals


# ---------------------------------------------------------------------------
# linear pair maps and relabelings

GL2 = tuple(
    np.array(m, dtype=np.uint8).reshape(2, 2)
    for m in itertools.product((0, 1), repeat=4)
    if (m[0] * m[3] + m[1] * m[2]) % 2 == 1
)
IDENTITY = np.eye(2, dtype=np.uint8)
SWAP = np.array([[0, 1], [1, 0]], dtype=np.uint8)
CNOT_LS = np.array([[1, 0], [1, 1]], dtype=np.uint8)  # x_S ^= x_L
# swap followed by CNOT(L -> S): order three on the pair
U_STAR = (CNOT_LS @ SWAP) % 2
U_STAR2 = (U_STAR @ U_STAR) % 2


def _key(A: np.ndarray) -> tuple[int, ...]:
    return tuple(int(v) for v in np.asarray(A).reshape(-1))


def _inv_t(A: np.ndarray) -> np.ndarray:
    return inverse(A).T.copy()


def _logical_xz(p: PauliProduct, logicals: dict[str, PauliProduct]) -> tuple[np.ndarray, np.ndarray]:
    """Logical coordinates (xL, xS), (zL, zS) of an operator commuting with the checks."""
    x = np.array([symplectic_commutes(p, logicals["Z_L"]), symplectic_commutes(p, logicals["Z_S"])], dtype=np.uint8)
    z = np.array([symplectic_commutes(p, logicals["X_L"]), symplectic_commutes(p, logicals["X_S"])], dtype=np.uint8)
    return x, z


def _logical_op(x: np.ndarray, z: np.ndarray, logicals: dict[str, PauliProduct], n: int) -> PauliProduct:
    out = PauliProduct.identity(n)
    for bit, name in ((x[0], "X_L"), (x[1], "X_S"), (z[0], "Z_L"), (z[1], "Z_S")):
        if bit:
            out = out * logicals[name]
    return out


def _pair_transform(p6: PauliProduct, perm: Sequence[int], mats: Sequence[np.ndarray], had: bool = False) -> PauliProduct:
    """Apply optional H on all six qubits, then per-pair linear maps, then move pair i to ``perm[i]``."""
    x = p6.x.copy()
    z = p6.z.copy()
    if had:
        x, z = z, x
    nx = np.zeros(6, dtype=np.uint8)
    nz = np.zeros(6, dtype=np.uint8)
    for i in range(3):
        A = mats[i]
        xi = (A @ x[2 * i : 2 * i + 2]) % 2
        zi = (_inv_t(A) @ z[2 * i : 2 * i + 2]) % 2
        j = perm[i]
        nx[2 * j : 2 * j + 2] = xi
        nz[2 * j : 2 * j + 2] = zi
    return PauliProduct.from_xz(nx, nz)


def _equiv(a: PauliProduct, b: PauliProduct, checks: Sequence[PauliProduct]) -> bool:
    return in_span(checks, a * b)


def _candidates():
    for perm in itertools.permutations(range(3)):
        for mats in itertools.product(GL2, repeat=3):
            yield perm, mats


def find_pair_transform(test: Callable[[Callable[[PauliProduct], PauliProduct]], bool], had: bool = False):
    """First (perm, mats) whose C6-level action passes ``test``."""
    for perm, mats in _candidates():
        if test(lambda p: _pair_transform(p, perm, mats, had)):
            return perm, mats
    return None


def _c6_realizes(T, A: np.ndarray | None, hadamard: bool = False) -> bool:
    c6 = code_spec("C6")
    rows = c6.checks.rows
    for r in rows:
        if not in_span(rows, T(r)):
            return False
    L = c6.logical_ops
    for name in ("X_L", "X_S", "Z_L", "Z_S"):
        x, z = _logical_xz(L[name], L)
        if hadamard:
            x, z = z, x
        else:
            x, z = (A @ x) % 2, (_inv_t(A) @ z) % 2
        if not _equiv(T(L[name]), _logical_op(x, z, L, 6), rows):
            return False
    return True


def _compose_block_perm(level: int, perm: Sequence[int], sub_perms: Sequence[Sequence[int]]) -> tuple[int, ...]:
    m = block_size(level - 1)
    out = [0] * (3 * m)
    for i in range(3):
        for j in range(m):
            out[i * m + j] = perm[i] * m + sub_perms[i][j]
    return tuple(out)


@lru_cache(maxsize=None)
def _pair_relabel(level: int, key: tuple[int, ...]) -> tuple[int, ...]:
    A = np.array(key, dtype=np.uint8).reshape(2, 2)
    if level == 1:
        c4 = code_spec("C4")
        rows = c4.checks.rows
        L = c4.logical_ops
        for p in itertools.permutations(range(4)):
            if not all(in_span(rows, r.permuted(p)) for r in rows):
                continue
            ok = True
            for name in ("X_L", "X_S", "Z_L", "Z_S"):
                x, z = _logical_xz(L[name], L)
                if not _equiv(L[name].permuted(p), _logical_op((A @ x) % 2, (_inv_t(A) @ z) % 2, L, 4), rows):
                    ok = False
                    break
            if ok:
                return tuple(p)
        raise RuntimeError("no C4 relabeling realizes this pair map")
    found = find_pair_transform(lambda T: _c6_realizes(T, A))
    if found is None:
        raise RuntimeError("no C6 relabeling realizes this pair map")
    perm, mats = found
    return _compose_block_perm(level, perm, [_pair_relabel(level - 1, _key(M)) for M in mats])


def pair_relabel(level: int, A: np.ndarray) -> tuple[int, ...]:
    """Physical permutation of a level-``level`` block realizing the pair map ``A``.

    Position ``q`` moves to ``perm[q]``.
    """
    return _pair_relabel(level, _key(A))


@lru_cache(maxsize=None)
def had_relabel(level: int) -> tuple[int, ...]:
    """Permutation applied after transversal physical HADs to get logical HAD on both qubits."""
    if level == 1:
        return (0, 2, 1, 3)
    found = find_pair_transform(lambda T: _c6_realizes(T, None, hadamard=True), had=True)
    if found is None:
        raise RuntimeError("no relabeling completes the transversal HAD")
    perm, mats = found
    sub = had_relabel(level - 1)
    subs = []
    for M in mats:
        p = _pair_relabel(level - 1, _key(M))
        subs.append(tuple(p[sub[j]] for j in range(len(sub))))
    return _compose_block_perm(level, perm, subs)


@lru_cache(maxsize=None)
def cat_rotation(kind: str) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    """Pair maps turning three GHZ-linked pairs into a C6 code state.

    ``kind`` "Z": L qubits and S qubits each in a Z-basis cat becomes the
    encoded ``|00>``; "X": X-basis cats become the encoded ``|++>``.  Returns
    the subblock permutation and the per-subblock pair maps (as flat keys).
    """
    ghz = [PauliProduct.from_xz([1, 0, 1, 0, 1, 0], [0] * 6), PauliProduct.from_xz([0, 1, 0, 1, 0, 1], [0] * 6)]
    c6 = code_spec("C6")
    if kind == "Z":
        target = c6.x_checks
    elif kind == "X":
        ghz = [PauliProduct.from_xz([0] * 6, g.x) for g in ghz]
        target = c6.z_checks
    else:
        raise ValueError("kind must be 'Z' or 'X'")

    def test(T):
        imgs = [T(g) for g in ghz]
        return all(in_span(target, im) for im in imgs) and in_span(imgs, target[0]) and in_span(imgs, target[1])

    found = find_pair_transform(test)
    if found is None:
        raise RuntimeError("no cat rotation found")
    perm, mats = found
    return tuple(perm), tuple(_key(M) for M in mats)


def cat_relabel(level: int, kind: str) -> tuple[int, ...]:
    """Physical permutation of a level-``level`` block (three fused subblocks) into code form."""
    perm, keys = cat_rotation(kind)
    return _compose_block_perm(level, perm, [_pair_relabel(level - 1, k) for k in keys])


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class Circuit:
    width: int
    ops: tuple[GateOp, ...]

    def __post_init__(self):
        for op in self.ops:
            if any(not 0 <= t < self.width for t in op.targets):
                raise ValueError(f"{op.line()} exceeds width {self.width}")
            if op.kind == "PERM" and op.noisy:
                raise ValueError("relabel ops must be noise-free")

    def text(self) -> str:
        return dump_circuit(self.ops)

    def count(self, kind: str) -> int:
        return sum(op.kind == kind for op in self.ops)


def _perm_op(perm: Sequence[int], offset: int = 0) -> GateOp:
    return GateOp("PERM", tuple(offset + p for p in perm), noisy=False)


def encoded_gate_circuit(gate: str, level: int) -> Circuit:
    """Physical circuit of an encoded gate acting in parallel on a block's qubit pair.

    Two-block gates use qubits ``0..n-1`` for the first block and ``n..2n-1``
    for the second.
    """
    n = block_size(level)
    if gate == "CNOT":
        return Circuit(2 * n, tuple(GateOp("CNOT", (q, n + q)) for q in range(n)))
    if gate == "HAD":
        ops = [GateOp("H", (q,)) for q in range(n)] + [_perm_op(had_relabel(level))]
        return Circuit(n, tuple(ops))
    if gate in ("*u", "*u2"):
        A = U_STAR if gate == "*u" else U_STAR2
        return Circuit(n, (_perm_op(pair_relabel(level, A)),))
    if gate in ("measZ", "measX"):
        kind = "MEASZ" if gate == "measZ" else "MEASX"
        return Circuit(n, tuple(GateOp(kind, (q,)) for q in range(n)))
    if gate in ("prepZ", "prepX"):
        raise ValueError(f"{gate} is a verified preparation protocol, not a fixed circuit")
    raise ValueError(f"unsupported encoded gate {gate!r}")


# ---------------------------------------------------------------------------
# decoding networks


@dataclass(frozen=True)
class DecodeCircuit:
    """Unitary network mapping the code space to two data qubits and syndrome ancillas.

    After the network, ancilla ``x_ancillas[k]`` measured in Z gives X-check
    ``k`` and ``z_ancillas[j]`` gives Z-check ``j``.  ``data`` holds (L, S).
    """

    code: str
    circuit: Circuit
    data: tuple[int, int]
    x_ancillas: tuple[int, ...]
    z_ancillas: tuple[int, ...]


def _cnot_decomposition(M: np.ndarray) -> list[tuple[int, int]]:
    """CNOT list (control, target) whose product acting on x-vectors is ``M``."""
    A = M.copy() % 2
    n = A.shape[0]
    ops: list[tuple[int, int]] = []  # row operations reducing A to I
    for c in range(n):
        if not A[c, c]:
            r = next(r for r in range(c + 1, n) if A[r, c])
            A[c] ^= A[r]
            ops.append((r, c))
        for r in range(n):
            if r != c and A[r, c]:
                A[r] ^= A[c]
                ops.append((c, r))
    # E_k ... E_1 M = I, so M = E_1 ... E_k and E_k acts first
    return [(src, dst) for src, dst in reversed(ops)]


def _synthesize(code: CodeSpec, free_prefix: bool) -> DecodeCircuit:
    n = code.n
    L = code.logical_ops
    xc = [r.x for r in code.x_checks]
    zc = [r.z for r in code.z_checks]
    xlog = [L["X_L"].x, L["X_S"].x]
    zlog = [L["Z_L"].z, L["Z_S"].z]
    # u_j: dual vectors to the Z checks, orthogonal to the Z logicals
    Z = np.array(zc + zlog, dtype=np.uint8)
    base_u = []
    for j in range(len(zc)):
        rhs = np.zeros(len(zc) + 2, dtype=np.uint8)
        rhs[j] = 1
        base_u.append(solve(Z, rhs))
    shifts = [np.zeros(n, dtype=np.uint8)]
    span_vecs = xc + xlog
    for bits in itertools.product((0, 1), repeat=len(span_vecs)):
        v = np.zeros(n, dtype=np.uint8)
        for b, s in zip(bits, span_vecs):
            if b:
                v ^= s
        shifts.append(v)
    best = None
    for u_shift in itertools.product(range(1, len(shifts)), repeat=len(zc)):
        us = [(base_u[j] ^ shifts[s]) for j, s in enumerate(u_shift)]
        cols = xc + xlog + us
        for assign in itertools.permutations(range(n)):
            B = np.zeros((n, n), dtype=np.uint8)
            for k, pos in enumerate(assign):
                B[:, pos] = cols[k]
            try:
                M = inverse(B)
            except ValueError:
                continue
            gates = _cnot_decomposition(M)
            cost = len(gates)
            if free_prefix:
                # leading CNOTs inside one qubit pair are relabels of the subblock below
                k = 0
                while k < len(gates) and gates[k][0] // 2 == gates[k][1] // 2:
                    k += 1
                cost -= k
            if best is None or cost < best[0]:
                best = (cost, assign, gates)
    _, assign, gates = best
    xa = tuple(assign[: len(xc)])
    data = (assign[len(xc)], assign[len(xc) + 1])
    za = tuple(assign[len(xc) + 2 :])
    ops = [GateOp("CNOT", g) for g in gates] + [GateOp("H", (q,)) for q in xa]
    return DecodeCircuit(code.name, Circuit(n, tuple(ops)), data, xa, za)


def synthesize_decode_circuit(name: str) -> DecodeCircuit:
    """Minimal-CNOT decoding network by exhaustive GF(2) search (slow for C6)."""
    return _synthesize(code_spec(name), free_prefix=(name == "C6"))


# frozen output of synthesize_decode_circuit: (ops text, data, x ancillas, z ancillas)
_DECODE_GOLDEN = {
    "C4": ("CNOT 3 1\nCNOT 2 3\nCNOT 2 0\nCNOT 0 1\nH 2\n", (0, 3), (2,), (1,)),
    "C6": (
        "CNOT 5 3\nCNOT 3 2\nCNOT 3 0\nCNOT 2 1\nCNOT 1 5\nCNOT 1 3\nCNOT 0 5\nCNOT 0 4\nH 0\nH 1\n",
        (2, 3),
        (0, 1),
        (4, 5),
    ),
}


@lru_cache(maxsize=None)
def decode_circuit(name: str) -> DecodeCircuit:
    """The frozen decoding network for C4 or C6."""
    try:
        text, data, xa, za = _DECODE_GOLDEN[name]
    except KeyError:
        raise ValueError(f"unknown code {name!r}; expected C4 or C6") from None
    ops = tuple(load_circuit(text))
    return DecodeCircuit(name, Circuit(code_spec(name).n, ops), data, xa, za)


def propagate(circuit: Circuit, p: PauliProduct) -> PauliProduct:
    """Heisenberg image of a phaseless Pauli through CNOT/H/S/PERM ops."""
    x = list(p.x)
    z = list(p.z)
    for op in circuit.ops:
        t = op.targets
        if op.kind == "CNOT":
            a, b = t
            x[b] ^= x[a]
            z[a] ^= z[b]
        elif op.kind == "H":
            q = t[0]
            x[q], z[q] = z[q], x[q]
        elif op.kind == "S":
            z[t[0]] ^= x[t[0]]
        elif op.kind == "PERM":
            mapping = dict(zip(sorted(t), t))
            nx, nz = x[:], z[:]
            for src, dst in mapping.items():
                nx[dst], nz[dst] = x[src], z[src]
            x, z = nx, nz
        else:
            raise ValueError(f"cannot propagate through {op.kind}")
    return PauliProduct.from_xz(x, z)


@dataclass(frozen=True)
class DecodeTables:
    """Syndrome and data image of every error on one input qubit (C4) or pair (C6)."""

    code: str
    groups: tuple[tuple[int, ...], ...]
    # table[g][syndrome bits] = (data x bits, data z bits); syndrome = x-checks then z-checks
    table: tuple[dict, ...]


@lru_cache(maxsize=None)
def decode_tables(name: str) -> DecodeTables:
    dc = decode_circuit(name)
    n = dc.circuit.width
    groups = tuple((i,) for i in range(n)) if name == "C4" else tuple((2 * i, 2 * i + 1) for i in range(3))
    anc = dc.x_ancillas + dc.z_ancillas
    tables = []
    for g in groups:
        t: dict = {}
        for ops in itertools.product("IXZY", repeat=len(g)):
            e = PauliProduct.identity(n)
            for q, o in zip(g, ops):
                if o != "I":
                    e = e * PauliProduct.single(n, q, o)
            img = propagate(dc.circuit, e)
            syn = tuple(int(img.x[a]) for a in anc)
            data = (tuple(int(img.x[d]) for d in dc.data), tuple(int(img.z[d]) for d in dc.data))
            t.setdefault(syn, data)
        tables.append(t)
    return DecodeTables(name, groups, tuple(tables))
