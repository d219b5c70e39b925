"""Dense state-vector simulator used as a test oracle for small circuits."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .stabilizer import GateOp, perm_mapping

MAX_QUBITS = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0 + 0j, -1.0]),
}


def _axis(n: int, q: int) -> int:
    # qubit q is bit q of the basis index; tensor axis 0 is the most significant bit
    return n - 1 - q


def apply_1q(psi: np.ndarray, n: int, q: int, U: np.ndarray) -> np.ndarray:
    t = psi.reshape((2,) * n)
    t = np.moveaxis(np.tensordot(U, t, axes=([1], [_axis(n, q)])), 0, _axis(n, q))
    return t.reshape(-1)


def apply_cnot(psi: np.ndarray, n: int, c: int, t: int) -> np.ndarray:
    idx = np.arange(psi.size)
    flip = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
    return psi[flip]


def apply_perm(psi: np.ndarray, n: int, mapping: dict[int, int]) -> np.ndarray:
    """Qubit ``q`` becomes qubit ``mapping[q]``."""
    idx = np.arange(psi.size)
    src = np.zeros_like(idx)
    for q in range(n):
        src |= ((idx >> mapping.get(q, q)) & 1) << q
    return psi[src]


def project(psi: np.ndarray, n: int, q: int, basis: str, outcome: int) -> tuple[np.ndarray, float]:
    """Project onto the outcome; returns the normalized state and its probability."""
    if basis == "X":
        psi = apply_1q(psi, n, q, _H)
    idx = np.arange(psi.size)
    keep = ((idx >> q) & 1) == outcome
    out = np.where(keep, psi, 0)
    p = float(np.vdot(out, out).real)
    if p > 1e-12:
        out = out / np.sqrt(p)
    if basis == "X":
        out = apply_1q(out, n, q, _H)
    return out, p


def zero_state(n: int) -> np.ndarray:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"dense oracle supports 1..{MAX_QUBITS} qubits, got {n}")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    return psi


def apply_unitary_op(psi: np.ndarray, n: int, op: GateOp) -> np.ndarray:
    t = op.targets
    if op.kind == "CNOT":
        return apply_cnot(psi, n, t[0], t[1])
    if op.kind == "H":
        return apply_1q(psi, n, t[0], _H)
    if op.kind == "S":
        return apply_1q(psi, n, t[0], _S)
    if op.kind == "PAULI":
        return apply_1q(psi, n, t[0], _PAULI[op.pauli])
    if op.kind == "PERM":
        return apply_perm(psi, n, perm_mapping(t))
    raise ValueError(f"{op.kind} is not unitary")


def statevector_oracle(n: int, ops: Sequence[GateOp], tol: float = 1e-12) -> dict[tuple[int, ...], float]:
    """Exact outcome-record distribution of a circuit started in ``|0...0>``.

    Preparations reset a qubit (both branches are followed without being
    recorded); measurements append their outcome to the record.
    """
    psi0 = zero_state(n)
    out: dict[tuple[int, ...], float] = {}

    def run(psi, k, record, prob):
        while k < len(ops):
            op = ops[k]
            if op.kind in ("MEASZ", "MEASX", "PREP0", "PREPX"):
                q = op.targets[0]
                basis = "X" if op.kind == "MEASX" else "Z"
                for m in (0, 1):
                    branch, p = project(psi, n, q, basis, m)
                    if p <= tol:
                        continue
                    if op.kind.startswith("PREP"):
                        if m:
                            branch = apply_1q(branch, n, q, _PAULI["X"])
                        if op.kind == "PREPX":
                            branch = apply_1q(branch, n, q, _H)
                        run(branch, k + 1, record, prob * p)
                    else:
                        run(branch, k + 1, record + (m,), prob * p)
                return
            psi = apply_unitary_op(psi, n, op)
            k += 1
        out[record] = out.get(record, 0.0) + prob

    run(psi0, 0, (), 1.0)
    return out
