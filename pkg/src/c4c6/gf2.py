"""Binary symplectic Paulis, check matrices and small GF(2) linear algebra.

A Pauli product on ``n`` qubits is stored as an integer bit mask with the
pair ``(x_q, z_q)`` at bits ``(2q, 2q + 1)``.  ``I, X, Z, Y`` map to
``00, 10, 01, 11``.  Phases are not tracked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_CHAR_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_CHAR = {v: k for k, v in _CHAR_BITS.items()}


def _even_mask(n: int) -> int:
    return int("01" * n, 2) if n else 0


def _swap_pairs(bits: int, n: int) -> int:
    """Exchange the x and z bit of every qubit (the block-diagonal swap form)."""
    even = _even_mask(n)
    return ((bits & even) << 1) | ((bits >> 1) & even)


@dataclass(frozen=True)
class PauliProduct:
    """Phaseless Pauli product as a length-``2n`` binary symplectic vector."""

    n: int
    bits: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be non-negative")
        if self.bits < 0 or self.bits >> (2 * self.n):
            raise ValueError("bits do not fit in 2n positions")

    @classmethod
    def identity(cls, n: int) -> "PauliProduct":
        return cls(n, 0)

    @classmethod
    def from_vector(cls, vec: Iterable[int]) -> "PauliProduct":
        vec = [int(b) & 1 for b in vec]
        if len(vec) % 2:
            raise ValueError("vector length must be even")
        bits = 0
        for i, b in enumerate(vec):
            bits |= b << i
        return cls(len(vec) // 2, bits)

    @classmethod
    def from_xz(cls, x: Sequence[int], z: Sequence[int]) -> "PauliProduct":
        if len(x) != len(z):
            raise ValueError("x and z parts differ in length")
        bits = 0
        for q, (a, b) in enumerate(zip(x, z)):
            bits |= (int(a) & 1) << (2 * q) | (int(b) & 1) << (2 * q + 1)
        return cls(len(x), bits)

    @classmethod
    def single(cls, n: int, qubit: int, op: str) -> "PauliProduct":
        a, b = _CHAR_BITS[op]
        return cls(n, (a << (2 * qubit)) | (b << (2 * qubit + 1)))

    @property
    def vector(self) -> np.ndarray:
        """Interleaved 0/1 array ``[x0 z0 x1 z1 ...]``."""
        return np.array([(self.bits >> i) & 1 for i in range(2 * self.n)], dtype=np.uint8)

    @property
    def x(self) -> np.ndarray:
        return self.vector[0::2]

    @property
    def z(self) -> np.ndarray:
        return self.vector[1::2]

    def op(self, qubit: int) -> str:
        return _BITS_CHAR[((self.bits >> (2 * qubit)) & 1, (self.bits >> (2 * qubit + 1)) & 1)]

    @property
    def weight(self) -> int:
        even = _even_mask(self.n)
        return ((self.bits | (self.bits >> 1)) & even).bit_count()

    def __mul__(self, other: "PauliProduct") -> "PauliProduct":
        _check_same(self, other)
        return PauliProduct(self.n, self.bits ^ other.bits)

    def __str__(self) -> str:
        return format_pauli(self)

    def __repr__(self) -> str:
        return f"PauliProduct('{format_pauli(self)}')"

    def permuted(self, perm: Sequence[int]) -> "PauliProduct":
        """Move the operator on qubit ``q`` to position ``perm[q]``."""
        out = 0
        for q in range(self.n):
            pair = (self.bits >> (2 * q)) & 3
            out |= pair << (2 * perm[q])
        return PauliProduct(self.n, out)

    def embed(self, n: int, positions: Sequence[int]) -> "PauliProduct":
        """Place this operator on the given positions of an ``n``-qubit register."""
        if len(positions) != self.n:
            raise ValueError("position count must equal qubit count")
        out = 0
        for q, p in enumerate(positions):
            out |= ((self.bits >> (2 * q)) & 3) << (2 * p)
        return PauliProduct(n, out)


def _check_same(a: PauliProduct, b: PauliProduct) -> None:
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n} qubits")


def parse_pauli(s: str) -> PauliProduct:
    """Parse an ``IXYZ`` string; raises ``ValueError`` naming the bad position."""
    bits = 0
    for q, ch in enumerate(s):
        try:
            a, b = _CHAR_BITS[ch]
        except KeyError:
            raise ValueError(f"invalid Pauli character {ch!r} at position {q}") from None
        bits |= (a << (2 * q)) | (b << (2 * q + 1))
    return PauliProduct(len(s), bits)


def format_pauli(p: PauliProduct) -> str:
    return "".join(p.op(q) for q in range(p.n))


def symplectic_commutes(a: PauliProduct, b: PauliProduct) -> int:
    """Return 0 if ``a`` and ``b`` commute and 1 if they anticommute."""
    _check_same(a, b)
    return (a.bits & _swap_pairs(b.bits, b.n)).bit_count() & 1


@dataclass(frozen=True)
class CheckMatrix:
    """Rows are check operators on ``n`` qubits."""

    n: int
    rows: tuple[PauliProduct, ...]

    def __post_init__(self):
        for r in self.rows:
            if r.n != self.n:
                raise ValueError("row width differs from n")

    @classmethod
    def from_strings(cls, rows: Sequence[str]) -> "CheckMatrix":
        ps = tuple(parse_pauli(r) for r in rows)
        n = ps[0].n if ps else 0
        return cls(n, ps)

    @property
    def matrix(self) -> np.ndarray:
        """``l x 2n`` uint8 array in interleaved layout."""
        if not self.rows:
            return np.zeros((0, 2 * self.n), dtype=np.uint8)
        return np.stack([r.vector for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def strings(self) -> list[str]:
        return [format_pauli(r) for r in self.rows]


@dataclass(frozen=True)
class Syndrome:
    """One bit per check row; 0 means eigenvalue +1."""

    bits: tuple[int, ...]

    @classmethod
    def zeros(cls, length: int) -> "Syndrome":
        return cls((0,) * length)

    @classmethod
    def from_string(cls, s: str) -> "Syndrome":
        return cls(tuple(int(c) for c in s))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


def syndrome_after_pauli(Q: CheckMatrix, x: Syndrome, g: PauliProduct) -> Syndrome:
    """``x + Q S g^T`` over GF(2)."""
    if len(x) != len(Q):
        raise ValueError(f"syndrome length {len(x)} does not match {len(Q)} checks")
    if g.n != Q.n:
        raise ValueError(f"Pauli acts on {g.n} qubits, checks on {Q.n}")
    return Syndrome(tuple(b ^ symplectic_commutes(r, g) for b, r in zip(x.bits, Q.rows)))


@dataclass(frozen=True)
class Violation:
    kind: str  # "anticommuting" or "dependent"
    rows: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind} rows {self.rows}"


def validate_check_matrix(Q: CheckMatrix) -> Violation | None:
    """``None`` when rows commute pairwise and are independent, else the first violation."""
    rows = Q.rows
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if symplectic_commutes(rows[i], rows[j]):
                return Violation("anticommuting", (i, j))
    # incremental rank test reports the first row in the span of earlier ones
    basis: dict[int, int] = {}
    for i, r in enumerate(rows):
        v = r.bits
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
        else:
            return Violation("dependent", (i,))
    return None


# ---------------------------------------------------------------------------
# dense GF(2) helpers on uint8 arrays


def row_reduce(M: np.ndarray, cols: Sequence[int] | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod 2.  Returns the reduced copy and pivot columns."""
    A = (np.asarray(M, dtype=np.uint8) & 1).copy()
    rows, ncols = A.shape
    order = range(ncols) if cols is None else cols
    pivots: list[int] = []
    r = 0
    for c in order:
        if r >= rows:
            break
        hits = np.nonzero(A[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        others = np.nonzero(A[:, c])[0]
        others = others[others != r]
        A[others] ^= A[r]
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M: np.ndarray) -> int:
    return len(row_reduce(M)[1])


def inverse(M: np.ndarray) -> np.ndarray:
    """Inverse of a square GF(2) matrix; raises if singular."""
    M = np.asarray(M, dtype=np.uint8) & 1
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    aug = np.concatenate([M, np.eye(n, dtype=np.uint8)], axis=1)
    R, piv = row_reduce(aug, cols=range(n))
    if len(piv) < n:
        raise ValueError("matrix is singular over GF(2)")
    return R[:, n:]


def solve(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution ``x`` of ``A x = b`` mod 2, or ``None``."""
    A = np.asarray(A, dtype=np.uint8) & 1
    b = np.asarray(b, dtype=np.uint8).reshape(-1, 1) & 1
    m, n = A.shape
    R, piv = row_reduce(np.concatenate([A, b], axis=1), cols=range(n))
    k = len(piv)
    if R[k:, n].any():
        return None
    x = np.zeros(n, dtype=np.uint8)
    for i, c in enumerate(piv):
        x[c] = R[i, n]
    return x


def nullspace(A: np.ndarray) -> np.ndarray:
    """Basis of ``{x : A x = 0}`` as rows."""
    A = np.asarray(A, dtype=np.uint8) & 1
    m, n = A.shape
    R, piv = row_reduce(A)
    free = [c for c in range(n) if c not in piv]
    out = []
    for f in free:
        x = np.zeros(n, dtype=np.uint8)
        x[f] = 1
        for i, c in enumerate(piv):
            x[c] = R[i, f]
        out.append(x)
    return np.array(out, dtype=np.uint8).reshape(len(out), n)


def symplectic_form(n: int) -> np.ndarray:
    """The ``2n x 2n`` block-diagonal matrix with blocks ``[[0,1],[1,0]]``."""
    S = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    for q in range(n):
        S[2 * q, 2 * q + 1] = 1
        S[2 * q + 1, 2 * q] = 1
    return S


def in_span(rows: Sequence[PauliProduct], p: PauliProduct) -> bool:
    """True when ``p`` is a GF(2) combination of ``rows`` (phases ignored)."""
    basis: dict[int, int] = {}
    for r in rows:
        v = r.bits
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    v = p.bits
    while v:
        top = v.bit_length() - 1
        if top not in basis:
            return False
        v ^= basis[top]
    return True
