import itertools

import numpy as np
import pytest

from c4c6.codes import (
    U_STAR,
    U_STAR2,
    _DECODE_GOLDEN,
    block_size,
    block_tree,
    cat_relabel,
    code_spec,
    concatenated_check_matrix,
    decode_circuit,
    decode_tables,
    encoded_gate_circuit,
    had_relabel,
    pair_relabel,
    propagate,
    synthesize_decode_circuit,
)
from c4c6.gf2 import CheckMatrix, PauliProduct, in_span, parse_pauli, symplectic_commutes, validate_check_matrix
from c4c6.stabilizer import GateOp, dump_circuit, exact_distribution
from c4c6.statevector import statevector_oracle
from helpers import c4_teleport_circuit


@pytest.mark.parametrize("level", [1, 2, 3])
def test_concatenated_checks_are_valid(level):
    Q, L = concatenated_check_matrix(level)
    n = block_size(level)
    assert Q.n == n and len(Q) == n - 2
    assert validate_check_matrix(Q) is None
    for a, b in itertools.combinations(["X_L", "Z_L", "X_S", "Z_S"], 2):
        expected = 1 if {a, b} in ({"X_L", "Z_L"}, {"X_S", "Z_S"}) else 0
        assert symplectic_commutes(L[a], L[b]) == expected
    for r in Q.rows:
        for p in L.values():
            assert symplectic_commutes(r, p) == 0


def test_block_tree_layout():
    t = block_tree(3)
    assert t.size == 36 and len(t.children) == 3
    assert list(t.children[2].children[1].physical_indices) == list(range(28, 32))
    with pytest.raises(ValueError):
        block_size(0)


def test_code_definitions():
    c6 = code_spec("C6")
    assert [str(r) for r in c6.x_checks] == ["XIIXXX", "XXXIIX"]
    with pytest.raises(ValueError):
        code_spec("C7")


def _equivalent(a, b, checks):
    return in_span(list(checks.rows), a * b) or a == b


@pytest.mark.parametrize("level", [1, 2, 3])
def test_had_relabel_conjugates_logicals(level):
    Q, L = concatenated_check_matrix(level)
    circ = encoded_gate_circuit("HAD", level)
    for r in Q.rows:
        assert in_span(list(Q.rows), propagate(circ, r))
    for a, b in (("X_L", "Z_L"), ("Z_L", "X_L"), ("X_S", "Z_S"), ("Z_S", "X_S")):
        assert _equivalent(propagate(circ, L[a]), L[b], Q)


@pytest.mark.parametrize("level", [1, 2, 3])
@pytest.mark.parametrize("A", [U_STAR, U_STAR2])
def test_pair_relabel_realizes_linear_map(level, A):
    Q, L = concatenated_check_matrix(level)
    perm = pair_relabel(level, A)
    for r in Q.rows:
        assert in_span(list(Q.rows), r.permuted(perm))
    # X part transforms by A, Z part by its inverse transpose
    xs = [L["X_L"], L["X_S"]]
    zs = [L["Z_L"], L["Z_S"]]
    Ainv_t = np.linalg.inv(A).round().astype(int).T % 2
    for j in range(2):
        img = xs[j].permuted(perm)
        want = PauliProduct.identity(Q.n)
        for i in range(2):
            if A[i, j]:
                want = want * xs[i]
        assert _equivalent(img, want, Q)
        img = zs[j].permuted(perm)
        want = PauliProduct.identity(Q.n)
        for i in range(2):
            if Ainv_t[i, j]:
                want = want * zs[i]
        assert _equivalent(img, want, Q)


@pytest.mark.parametrize("level", [2, 3])
@pytest.mark.parametrize("kind", ["Z", "X"])
def test_cat_relabel_gives_code_state(level, kind):
    """Three subblocks joined by L and S cats become the encoded |00> (Z) or |++> (X)."""
    sub_q, sub_l = concatenated_check_matrix(level - 1)
    m = sub_q.n
    n = 3 * m
    gens = []
    for i in range(3):
        pos = range(i * m, (i + 1) * m)
        gens += [r.embed(n, pos) for r in sub_q.rows]
    pauli = "Z" if kind == "Z" else "X"
    other = "X" if kind == "Z" else "Z"
    for which in ("L", "S"):
        ops = [sub_l[f"{pauli}_{which}"].embed(n, range(i * m, (i + 1) * m)) for i in range(3)]
        gens += [ops[0] * ops[1], ops[1] * ops[2]]
        alls = sub_l[f"{other}_{which}"].embed(n, range(m))
        for i in (1, 2):
            alls = alls * sub_l[f"{other}_{which}"].embed(n, range(i * m, (i + 1) * m))
        gens.append(alls)
    perm = cat_relabel(level, kind)
    moved = [g.permuted(perm) for g in gens]
    Q, L = concatenated_check_matrix(level)
    state = CheckMatrix(n, tuple(moved))
    assert validate_check_matrix(state) is None and len(state) == n
    for r in Q.rows:
        assert in_span(moved, r)
    for name in (f"{pauli}_L", f"{pauli}_S"):
        assert in_span(moved, L[name])


# ---------------------------------------------------------------------------
# decoding networks


@pytest.mark.parametrize("name", ["C4", "C6"])
def test_decode_circuit_contract(name):
    dc = decode_circuit(name)
    code = code_spec(name)
    n = code.n
    for k, chk in enumerate(code.x_checks):
        assert propagate(dc.circuit, chk) == PauliProduct.single(n, dc.x_ancillas[k], "Z")
    for k, chk in enumerate(code.z_checks):
        assert propagate(dc.circuit, chk) == PauliProduct.single(n, dc.z_ancillas[k], "Z")
    L, S = dc.data
    for name_, q, op in (("X_L", L, "X"), ("Z_L", L, "Z"), ("X_S", S, "X"), ("Z_S", S, "Z")):
        img = propagate(dc.circuit, code.logical_ops[name_])
        anc = [PauliProduct.single(n, a, "Z") for a in dc.x_ancillas + dc.z_ancillas]
        assert _equivalent(img, PauliProduct.single(n, q, op), CheckMatrix(n, tuple(anc)))


def test_c4_decode_on_encoded_states():
    """Noise-free |00>_L decodes to data 00 and ancillas 00; XIII flags the Z check."""
    dc = decode_circuit("C4")
    enc = [GateOp("H", (0,)), GateOp("CNOT", (0, 1)), GateOp("CNOT", (0, 2)), GateOp("CNOT", (0, 3))]
    meas = [GateOp("MEASZ", (q,)) for q in (*dc.data, *dc.x_ancillas, *dc.z_ancillas)]
    ops = enc + list(dc.circuit.ops) + meas
    assert statevector_oracle(4, ops) == pytest.approx({(0, 0, 0, 0): 1.0})
    err = enc + [GateOp("PAULI", (0,), pauli="X")] + list(dc.circuit.ops) + meas
    (rec,) = statevector_oracle(4, err)
    assert rec[3] == 1 and rec[2] == 0


@pytest.mark.parametrize("name", ["C4", "C6"])
def test_decode_tables_match_propagation(name):
    dc = decode_circuit(name)
    tabs = decode_tables(name)
    n = dc.circuit.width
    anc = dc.x_ancillas + dc.z_ancillas
    for g, table in zip(tabs.groups, tabs.table):
        for ops in itertools.product("IXZY", repeat=len(g)):
            e = PauliProduct.identity(n)
            for q, o in zip(g, ops):
                if o != "I":
                    e = e * PauliProduct.single(n, q, o)
            img = propagate(dc.circuit, e)
            syn = tuple(int(img.x[a]) for a in anc)
            dx, dz = table[syn]
            assert tuple(int(img.x[d]) for d in dc.data) == tuple(dx)
            assert tuple(int(img.z[d]) for d in dc.data) == tuple(dz)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["C4", "C6"])
def test_golden_networks_resynthesize(name):
    text, data, xa, za = _DECODE_GOLDEN[name]
    dc = synthesize_decode_circuit(name)
    assert dump_circuit(dc.circuit.ops) == text
    assert (dc.data, dc.x_ancillas, dc.z_ancillas) == (data, xa, za)


# ---------------------------------------------------------------------------
# teleportation reveals the syndrome (12-qubit dense oracle)


def test_teleportation_outcomes_equal_syndrome_exhaustive():
    """For every Pauli error on an encoded C4 input, the transversal Bell
    measurement against a logical Bell pair has X-outcome parity equal to the
    XXXX syndrome and Z-outcome parity equal to the ZZZZ syndrome, with
    certainty.  The stabilizer engine reproduces the dense distributions."""
    checks = {"X": parse_pauli("XXXX"), "Z": parse_pauli("ZZZZ")}
    for ops in itertools.product("IXYZ", repeat=4):
        circuit = c4_teleport_circuit(ops)
        dense = statevector_oracle(12, circuit)
        e = parse_pauli("".join(ops))
        sx, sz = symplectic_commutes(checks["X"], e), symplectic_commutes(checks["Z"], e)
        for rec, p in dense.items():
            assert p > 0
            assert sum(rec[:4]) % 2 == sx
            assert sum(rec[4:]) % 2 == sz
        engine = exact_distribution(12, circuit)
        assert set(engine) == set(dense)
        assert all(abs(engine[k] - dense[k]) < 1e-12 for k in dense)


def test_encoded_gate_circuit_rejects_preparations():
    with pytest.raises(ValueError):
        encoded_gate_circuit("prepZ", 1)
    assert len(encoded_gate_circuit("CNOT", 2).ops) == 12
    assert had_relabel(1) == (0, 2, 1, 3)
