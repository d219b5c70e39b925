import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from c4c6.resources import (
    PUBLISHED_CONSTANTS,
    SIMULATED_TABLES,
    ResourceRecursionParams,
    bootstrap_feasibility,
    computation_cost,
    default_rbell,
    fibonacci,
    fit_rbell,
    gamma_resources,
    model_errors,
    optimize_pcnot,
    pi8_overhead,
    pi8_purification,
    scaleup,
    table_params,
    threshold_from_recursion,
    transfer_ratios,
    zero_error_resources,
)


def test_zero_error_counts_low_levels():
    assert [zero_error_resources(l) for l in range(4)] == [(2, 1), (16, 20), (192, 300), (2304, 3780)]
    with pytest.raises(ValueError):
        zero_error_resources(-1)


@pytest.mark.parametrize("l,preps,cnots", [(4, 2.765e4, 4.590e4), (5, 3.318e5, 5.524e5), (6, 3.981e6, 6.634e6)])
def test_zero_error_counts_high_levels_to_printed_digits(l, preps, cnots):
    p, c = zero_error_resources(l)
    assert float(f"{p:.3e}") == preps and float(f"{c:.3e}") == cnots


@given(st.integers(0, 10))
def test_retry_recursion_reduces_to_error_free(l):
    ones = ResourceRecursionParams({k: 1.0 for k in range(1, 12)}, {k: 1.0 for k in range(2, 12)})
    assert gamma_resources(l, ones) == pytest.approx(zero_error_resources(l))


@given(st.integers(1, 6), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_retry_recursion_monotone_in_success(l, v, t):
    lo = ResourceRecursionParams({k: v for k in range(1, 8)}, {k: t for k in range(2, 8)})
    hi = ResourceRecursionParams({k: 1.0 for k in range(1, 8)}, {k: 1.0 for k in range(2, 8)})
    p_lo, c_lo = gamma_resources(l, lo)
    p_hi, c_hi = gamma_resources(l, hi)
    assert p_lo >= p_hi - 1e-9 and c_lo >= c_hi - 1e-9


@pytest.mark.parametrize("gamma,l", [(g, l) for g in SIMULATED_TABLES for l in range(1, 6)])
def test_retry_recursion_matches_tabulated_formula(gamma, l):
    _, _, p_formula, _, c_formula, _, _ = SIMULATED_TABLES[gamma][l]
    p, c = gamma_resources(l, table_params(gamma))
    # tabulated success rates carry three digits
    assert p == pytest.approx(p_formula, rel=0.01)
    assert c == pytest.approx(c_formula, rel=0.01)


def test_recursion_params_validation():
    with pytest.raises(ValueError):
        ResourceRecursionParams({1: 0.0}, {})
    with pytest.raises(ValueError):
        gamma_resources(3, ResourceRecursionParams({1: 0.9}, {}))


def test_rbell_fit_exact_on_model_data():
    pts = [(g, 300 / (1 - g) ** 150) for g in (1e-4, 1e-3, 1e-2)]
    P, k = fit_rbell(pts)
    assert P == pytest.approx(300) and k == pytest.approx(150)
    assert fit_rbell(pts, 2, fix_intercept=True) == pytest.approx((300, 150))
    with pytest.raises(ValueError):
        fit_rbell(pts[:2])


def test_default_rbell_tracks_simulated_counts():
    rb = default_rbell()
    for g in SIMULATED_TABLES:
        for l in range(1, 6):
            assert rb.rbell(l, g) == pytest.approx(SIMULATED_TABLES[g][l][5], rel=0.2)
    assert rb.P[6] == zero_error_resources(6)[1] and rb.k[6] > rb.k[5]


def test_fibonacci_exponents():
    assert [fibonacci(n) for n in range(8)] == [0, 1, 1, 2, 3, 5, 8, 13]
    pd, pc = model_errors(1, 0.1)
    assert pd == pytest.approx(3.7) and pc == pytest.approx(35.2 * 0.01)


def test_transfer_ratios_reproduce_tabulated_constants():
    D1, C1 = transfer_ratios(PUBLISHED_CONSTANTS, 1)
    D2, C2 = transfer_ratios(PUBLISHED_CONSTANTS, 2)
    D3, _ = transfer_ratios(PUBLISHED_CONSTANTS, 3)
    assert abs(D1 - 29.94) < 1.13
    assert C1 == pytest.approx(3.43, abs=0.01)
    assert D2 == pytest.approx(4.87, abs=0.01)
    assert C2 == pytest.approx(1.69, abs=0.02)
    assert D3 == pytest.approx(3.01, abs=0.01)


def test_transfer_extension_above_level_three():
    d4, c4 = model_errors(4, 0.01)
    assert d4 == pytest.approx(2.39e7 * 0.01**5)
    assert c4 == pytest.approx(1.69 * 2.18e4 * 7.95e6 * 0.01**8)
    d5, _ = model_errors(5, 0.01)
    assert d5 == pytest.approx(4.87 * c4 / 0.01**8 * 0.01**8)


def _vanishes(g, levels=2000):
    pd, pc = 2.18e4 * g**3, 7.95e6 * g**5
    for _ in range(levels):
        pd, pc = 4.87 * pc, 1.69 * pd * pc
        if pd > 1e6:
            return False
    return pd < 1e-300


def test_threshold_bisection():
    r = threshold_from_recursion()
    assert r.gamma == pytest.approx(0.02805, abs=1e-4)
    assert r.hi - r.lo <= 1e-6
    assert _vanishes(r.lo) and not _vanishes(r.hi + 1e-5)
    assert all(ok == _vanishes(m) for m, ok in r.trace[:5])
    with pytest.raises(ValueError):
        threshold_from_recursion(lo=0.03)


def test_pcnot_scan():
    r = optimize_pcnot(1e3, 0.01)
    assert r.feasible and r.level == 4
    assert r.pcnot == min(c for _, c, ok in r.scan if ok)
    assert not optimize_pcnot(1e12, 0.05).feasible


@given(st.floats(1e3, 1e6))
def test_pcnot_nondecreasing_in_computation_size(kq):
    a = optimize_pcnot(kq, 0.001)
    b = optimize_pcnot(kq * 10, 0.001)
    assert b.pcnot >= a.pcnot


def test_pi8_purification_against_code_enumeration():
    """Accepted error patterns are codewords of the [15,11] Hamming code; odd weight is a logical error."""
    H = np.array([[(j >> i) & 1 for j in range(1, 16)] for i in range(4)])
    weights = np.zeros(16, dtype=np.int64)
    patterns = ((np.arange(2**15)[:, None] >> np.arange(15)) & 1).astype(np.int64)
    ok = ~((patterns @ H.T) % 2).any(axis=1)
    assert ok.sum() == 2**11
    for w in patterns[ok].sum(axis=1):
        weights[w] += 1
    for eps in (0.01, 0.001, 0.0001, 0.2):
        probs = np.array([eps**w * (1 - eps) ** (15 - w) for w in range(16)])
        acc = float((weights * probs).sum())
        err = float((weights * probs)[1::2].sum()) / acc
        e1, p1 = pi8_purification(eps)
        assert p1 == pytest.approx(acc, rel=1e-12)
        assert e1 == pytest.approx(err, rel=1e-9)


@pytest.mark.parametrize("eps,e1,p1", [(0.01, 3.6e-5, 0.860), (0.001, 3.5e-8, 0.985), (0.0001, 3.5e-11, 0.999)])
def test_pi8_purification_tabulated(eps, e1, p1):
    e, p = pi8_purification(eps)
    assert float(f"{e:.1e}") == e1 and round(p, 3) == p1
    assert e == pytest.approx(35 * eps**3, rel=0.05)


def test_pi8_overhead():
    assert pi8_overhead(0.0) == 201
    assert pi8_overhead(2.4e-3 / 4) == pytest.approx(201 / (1 - 6e-4) ** 201)
    with pytest.raises(ValueError):
        pi8_overhead(1.0)


def test_computation_cost_example():
    r = computation_cost(1000, 370, 2.4e-3, 2.3e-5, 3e7)
    assert r.tries == pytest.approx(1 / (1 - 2.4e-3) ** 1000)
    assert r.tries == pytest.approx(11.0, rel=0.01)
    assert r.error == pytest.approx(0.0227, abs=5e-4)
    assert r.total_cnots == pytest.approx(1000 * 370 * r.tries * 3e7)


def test_bootstrap_condition():
    r = bootstrap_feasibility(0.05)
    assert r.effective == pytest.approx((2 + 1 + 8 / 15) * 0.05)
    assert r.feasible
    assert not bootstrap_feasibility(0.06).feasible
    assert bootstrap_feasibility(0.19 / 3.5334).feasible


def test_scaleup():
    assert scaleup(1, "min") == 2 and scaleup(3, "min") == 18
    assert scaleup(3, "low") == 5 * 18
    assert scaleup(2, "max", pcnot=1e4) == 1e4
    with pytest.raises(ValueError):
        scaleup(2, "max")
    with pytest.raises(ValueError):
        scaleup(0)
