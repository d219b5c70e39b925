"""Shared circuit generators for the test modules."""

from c4c6.stabilizer import GateOp

KINDS = ("H", "S", "CNOT", "PAULI", "MEASZ", "MEASX", "PREP0", "PREPX", "PERM")


def random_circuit(rng, n, length):
    ops = []
    for _ in range(length):
        kind = KINDS[rng.integers(len(KINDS))]
        if kind == "CNOT":
            if n < 2:
                continue
            a, b = rng.choice(n, 2, replace=False)
            ops.append(GateOp("CNOT", (int(a), int(b))))
        elif kind == "PAULI":
            ops.append(GateOp("PAULI", (int(rng.integers(n)),), pauli="XYZ"[rng.integers(3)]))
        elif kind == "PERM":
            k = int(rng.integers(1, n + 1))
            qs = rng.choice(n, k, replace=False)
            ops.append(GateOp("PERM", tuple(int(q) for q in rng.permutation(qs))))
        else:
            ops.append(GateOp(kind, (int(rng.integers(n)),)))
    return ops


def same_distribution(a, b, tol=1e-12):
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in keys)


def c4_zero(off):
    return [GateOp("H", (off,))] + [GateOp("CNOT", (off, off + k)) for k in (1, 2, 3)]


def c4_plus(off):
    return c4_zero(off) + [GateOp("H", (off + k,)) for k in range(4)]


def c4_teleport_circuit(ops):
    """Encoded C4 input with Pauli ``ops`` (string over IXYZ), logical Bell pair, transversal Bell measurement."""
    err = [GateOp("PAULI", (q,), pauli=o) for q, o in enumerate(ops) if o != "I"]
    bell = c4_plus(4) + c4_zero(8) + [GateOp("CNOT", (4 + q, 8 + q)) for q in range(4)]
    bsm = [GateOp("CNOT", (q, 4 + q)) for q in range(4)]
    bsm += [GateOp("MEASX", (q,)) for q in range(4)] + [GateOp("MEASZ", (4 + q,)) for q in range(4)]
    return c4_zero(0) + err + bell + bsm

