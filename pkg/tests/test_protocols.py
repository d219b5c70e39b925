import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from c4c6.codes import block_size, concatenated_check_matrix
from c4c6.gf2 import PauliProduct, symplectic_commutes
from c4c6.harness import fault_sweep, leading_coefficients
from c4c6.noise import noise_params
from c4c6.protocols import (
    FaultPlan,
    Noise,
    PrepContext,
    bell_pool,
    bernoulli_positions,
    decode_block_bottom_up,
    hierarchical_decide,
    ideal_bell_pair,
    inject_state,
    measure_block,
    prepare_encoded_cat,
    virtual_decode,
)
from c4c6.resources import zero_error_resources
from c4c6.stabilizer import TrialBatch


def _bits(p: PauliProduct):
    return np.array(p.x, bool)[:, None], np.array(p.z, bool)[:, None]


def test_prep_context_validation():
    with pytest.raises(ValueError):
        PrepContext("maybe")
    with pytest.raises(ValueError):
        PrepContext("ec", 2)
    assert PrepContext("ec", 1).correct_upto(3) == 2
    assert PrepContext("postselect", 0).correct_upto(3) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.data())
def test_decide_reads_logicals_through_stabilizers(level, data):
    Q, L = concatenated_check_matrix(level)
    e = PauliProduct.identity(Q.n)
    for r in Q.rows:
        if data.draw(st.booleans()):
            e = e * r
    for name in ("X_L", "Z_L", "X_S", "Z_S"):
        if data.draw(st.booleans()):
            e = e * L[name]
    x, z = _bits(e)
    ctx = data.draw(st.sampled_from([PrepContext(), PrepContext("ec", 0), PrepContext("ec", 1)]))
    lx, lz, flag = hierarchical_decide(x, z, level, ctx)
    assert not flag[0]
    assert [int(v) for v in lx[:, 0]] == [symplectic_commutes(e, L["Z_L"]), symplectic_commutes(e, L["Z_S"])]
    assert [int(v) for v in lz[:, 0]] == [symplectic_commutes(e, L["X_L"]), symplectic_commutes(e, L["X_S"])]


@pytest.mark.parametrize("level", [2, 3])
def test_single_errors_corrected_or_flagged(level):
    n = block_size(level)
    for q in range(n):
        for op in "XZY":
            x, z = _bits(PauliProduct.single(n, q, op))
            lx, lz, flag = hierarchical_decide(x, z, level, PrepContext("ec", 0))
            assert not flag[0] and not lx.any() and not lz.any()
            _, _, flag = hierarchical_decide(x, z, level, PrepContext())
            assert flag[0]
            # top level detects only: corrected below it when there is a level below
            lx, lz, flag = hierarchical_decide(x, z, level, PrepContext("ec", 1))
            assert flag[0] == (level == 2)
            assert flag[0] or not (lx.any() or lz.any())


def test_decide_uses_only_available_checks():
    x, z = _bits(PauliProduct.single(4, 0, "Z"))
    _, _, flag = hierarchical_decide(x, z, 1, PrepContext(), use_x=True, use_z=False)
    assert not flag[0]
    with pytest.raises(ValueError):
        hierarchical_decide(np.zeros((5, 1), bool), np.zeros((5, 1), bool), 1, PrepContext())


@pytest.mark.parametrize("level", [1, 2])
def test_noise_free_pool_counts(level):
    pool = bell_pool(level, 8, noise_params(0.0), PrepContext(), np.random.default_rng(0))
    preps, cnots = zero_error_resources(level)
    assert pool.size >= 8
    assert pool.unit.preps == preps and pool.unit.cnots == cnots and pool.unit.attempts == 1
    assert pool.stats["v"] == 1.0 and pool.stats["t"] == 1.0
    batch, a, b = pool.take(pool.size)
    for blk in (a, b):
        rx, rz = batch.residual(blk)
        assert not rx.any() and not rz.any()


def test_noise_free_cats_and_measurements():
    for kind in "XZ":
        batch, block, ok, _ = prepare_encoded_cat(2, kind, 16, noise_params(0.0), PrepContext(), np.random.default_rng(1))
        assert ok.all()
        bits, flag = measure_block(batch, Noise(noise_params(0.0), np.random.default_rng(2)), block, 2, kind, PrepContext())
        assert not bits.any() and not flag.any()


def test_bottom_up_decoding_noise_free():
    out = inject_state(1, 16, noise_params(0.0), PrepContext(), np.random.default_rng(0))
    assert out["decode_wrong"] == 0 and out["detected"] == 0 and out["injection_error_sum"] == 0.0
    batch = TrialBatch(4, np.random.default_rng(0), randomize=False)
    a, b = ideal_bell_pair(batch, 2)
    data, flag = decode_block_bottom_up(batch, Noise(noise_params(0.0), np.random.default_rng(0)), a, 2, PrepContext())
    assert len(data) == 2 and not flag.any()
    rx, rz = batch.residual(data)
    assert not rx.any() and not rz.any()


def test_virtual_decode_sees_injected_logical():
    batch = TrialBatch(3, np.random.default_rng(0), randomize=False)
    a, _ = ideal_bell_pair(batch, 1)
    _, L = concatenated_check_matrix(1)
    batch.inject_error(1, L["X_L"], list(a))
    lx, lz, flag = virtual_decode(batch, a, 1, PrepContext())
    assert lx[0].tolist() == [False, True, False] and not lz.any() and not flag.any()


def test_fault_plan_places_faults_deterministically():
    noise = Noise(noise_params(0.0), np.random.default_rng(0), plan=FaultPlan({1: [(2, 1)]}), record=True)
    batch = TrialBatch(4, np.random.default_rng(0), randomize=False)
    noise.prep(batch, 3)
    assert noise.sites == ["prep"] * 3
    assert batch.ex[:3].any(axis=0).tolist() == [False, False, True, False] or batch.ez[:3].any(axis=0).tolist() == [False, False, True, False]


@given(st.floats(0.0, 1.0), st.integers(0, 500), st.integers(0, 2**31))
def test_bernoulli_positions_valid(p, n, seed):
    pos = bernoulli_positions(p, n, np.random.default_rng(seed))
    assert np.all(np.diff(pos) > 0) and (len(pos) == 0 or (pos[0] >= 0 and pos[-1] < n))
    if p == 1.0:
        assert len(pos) == n


def test_bernoulli_positions_rate():
    pos = bernoulli_positions(0.01, 2_000_000, np.random.default_rng(9))
    assert abs(len(pos) - 20_000) < 6 * np.sqrt(20_000)


@pytest.mark.parametrize("mode", ["postselect", "ec"])
def test_single_faults_never_cause_undetected_errors_in_verified_cats(mode):
    r = fault_sweep(1, PrepContext(mode))
    assert r["fault_free_ok"] and r["trials"] == 392 and r["undetected_logical"] == 0
    assert 0 < r["accepted"] < r["trials"]


@pytest.mark.slow
def test_level1_cnot_fault_enumeration():
    """Single faults never give undetected logical errors; fault pairs do, so the check is not vacuous."""
    r = leading_coefficients("CNOT", 1, PrepContext("ec"))
    assert r["single_fault_undetected"] == 0
    assert r["d"] == pytest.approx(37.6, abs=0.05)
    assert r["c"] > 10
