import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleepcmdp import bounds
from sleepcmdp.bounds import (
    TruncationConstants, gap_structure, rate_check, regret_bound, regret_curve, regret_metric, theorem1_bound,
    theorem1_min_iterations, theorem2_bound, truncation_constants,
)


def consts(gamma=0.5, beta=0.5, r_max=1.0, c_max=1.0):
    return SimpleNamespace(gamma=gamma, beta=beta, r_max=r_max, c_max=c_max)


def test_truncation_constants():
    assert truncation_constants(consts(beta=0.5), 3).alpha_H == pytest.approx(0.25)
    assert truncation_constants(consts(beta=0.5, c_max=0.7), 0).alpha_H == pytest.approx(1.4)
    assert truncation_constants(consts(gamma=0.9, r_max=0.1), 50).r_H == pytest.approx(0.9**50)
    assert 0.9**50 == pytest.approx(5.1538e-3, rel=1e-4)


def test_truncation_constants_decrease():
    c = [truncation_constants(consts(0.7, 0.6), h) for h in range(30)]
    assert all(a.alpha_H > b.alpha_H and a.r_H > b.r_H for a, b in zip(c, c[1:]))


def test_horizon_for():
    assert bounds.horizon_for(0.8, 0.2, 0.02) == 18
    assert 0.8**18 <= 0.02 < 0.8**17


def test_theorem1_examples():
    assert theorem1_bound(10, 0.2, 0.1, 1000) == pytest.approx(1 - 20 * math.exp(-20), abs=1e-15)
    assert theorem1_bound(10, 0.2, 0.1, 1000) == pytest.approx(0.99999995877, abs=1e-11)
    assert theorem1_bound(10, 0.1001, 0.1, 1, clamp=False) < 0
    assert theorem1_bound(10, 0.1001, 0.1, 1) == 0.0
    with pytest.raises(ValueError):
        theorem1_bound(10, 0.1, 0.1, 10)


def test_theorem1_min_iterations_matches_search():
    n = 1
    while 1 - 20 * math.exp(-2 * 0.01 * n) < 0.99:
        n += 1
    assert n == 381 == math.ceil(math.log(2000) / 0.02)
    assert theorem1_min_iterations(10, 0.15, 0.05, 0.99) == 381


@settings(max_examples=100)
@given(p=st.integers(1, 50), a=st.floats(0, 0.5), d1=st.floats(1e-3, 0.5), d2=st.floats(1e-3, 0.5),
       n1=st.integers(1, 5000), n2=st.integers(1, 5000))
def test_theorem1_monotone(p, a, d1, d2, n1, n2):
    lo_d, hi_d = sorted((d1, d2))
    lo_n, hi_n = sorted((n1, n2))
    assert theorem1_bound(p, a + lo_d, a, lo_n) <= theorem1_bound(p, a + lo_d, a, hi_n)
    assert theorem1_bound(p, a + lo_d, a, lo_n) <= theorem1_bound(p, a + hi_d, a, lo_n)


def test_theorem2_examples():
    c = TruncationConstants(alpha_H=0.01, r_H=0.05)
    single = theorem2_bound([0.8, 0.5, 0.3], [0], 3, 0.1, c, 500)
    assert single.selection_factor == 1.0 and single.leader == 0
    two = theorem2_bound([0.8, 0.5], [0, 1], 2, 0.1, c, 500)
    assert two.selection_factor == pytest.approx(1 - 2 * math.exp(-10))
    assert two.value == pytest.approx((1 - 4 * math.exp(-2 * 0.0081 * 500)) * (1 - 2 * math.exp(-10)))
    vac = theorem2_bound([0.8, 0.75], [0, 1], 2, 0.1, c, 500)
    assert vac.vacuous == (1,) and vac.value == 0.0
    with pytest.raises(ValueError, match="policies 0 and 2"):
        theorem2_bound([0.4, 0.5, 0.4], [0, 1], 3, 0.1, c, 10)


def test_gap_structure_all_equal():
    gs = gap_structure([0.3] * 4)
    assert gs.min_positive_gap is None
    assert gs.i_y.tolist() == [0, 0, 0, 0]
    assert gs.j_y.tolist() == [3, 3, 3, 3]
    assert np.all(gs.gaps == 0)


def test_gap_structure_ties():
    gs = gap_structure([0.7, 0.9, 0.2, 0.7])
    assert gs.order.tolist() == [1, 0, 3, 2]
    brute = min(a - b for a in gs.values for b in gs.values if a - b > 0)
    assert gs.min_positive_gap == brute == pytest.approx(0.2)
    assert gs.i_y.tolist() == [0, 1, 1, 3]
    assert gs.j_y.tolist() == [0, 2, 2, 3]
    wide = gap_structure([0.7, 0.9, 0.2, 0.7], y=0.7)
    assert wide.i_y.tolist() == [0, 0, 0, 0]


@settings(max_examples=100)
@given(st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.8, 1.0]), min_size=1, max_size=10), st.floats(0, 1))
def test_gap_structure_invariants(values, y):
    gs = gap_structure(values, y)
    p = len(values)
    assert sorted(gs.order.tolist()) == list(range(p))
    ranked = np.asarray(values)[gs.order]
    assert np.all(np.diff(ranked) <= 0)
    assert np.all(gs.i_y <= np.arange(p)) and np.all(np.arange(p) <= gs.j_y)
    g0 = gap_structure(values)
    for j in range(p):
        if g0.i_y[j] > 0:
            assert g0.ranked_gap(g0.i_y[j] - 1, g0.i_y[j]) > 0


def test_regret_bound_by_hand():
    rb = regret_bound(gap_structure([0.9, 0.6, 0.5]), 10, "FTAL", delta=0.01)
    assert rb.value == pytest.approx(0.02 + 2 * (1 / 3 + 1))
    assert rb.undefined_terms == 0
    auer = regret_bound(gap_structure([0.9, 0.6, 0.5]), 10, "AUER", delta=0.01)
    assert auer.value == pytest.approx(0.02 + 2 * (1 / 3 + 1) * math.log(10))
    ties = regret_bound(gap_structure([0.9, 0.9, 0.5]), 10, "FTAL", delta=0.01)
    assert ties.value == pytest.approx(0.02 + 3 / (10 * 0.4))
    tail = regret_bound(gap_structure([0.9, 0.5, 0.5]), 10, "FTAL", delta=0.01)
    assert tail.undefined_terms == 1
    # two upward terms, one defined downward term, one undefined downward term
    assert tail.value == pytest.approx(0.02 + 3 / (10 * 0.4) + 1 / (10 * 0.01))
    assert regret_bound(gap_structure([0.9, 0.6]), 50).delta == pytest.approx(1 / 50)


def fake_trace(feasible, chosen):
    return SimpleNamespace(feasible=np.array(feasible, dtype=bool), chosen=np.array(chosen))


def test_regret_metric():
    v = [0.2, 0.9, 0.5]
    tr = fake_trace([[1, 1, 0], [1, 0, 1], [0, 0, 0], [1, 1, 1]], [1, 2, 0, 1])
    m = regret_metric(tr, v)
    assert m.regret == 0.0 and m.counted == 3
    tr2 = fake_trace([[1, 1, 0], [1, 0, 1]], [0, 0])
    m2 = regret_metric(tr2, v)
    assert m2.avg_best == pytest.approx(0.7) and m2.avg_chosen == pytest.approx(0.2)
    assert m2.regret == pytest.approx(0.5)
    assert regret_metric(fake_trace([[0, 0, 0]], [0]), v) is None
    assert regret_metric(fake_trace([[1]] * 4, [0] * 4), [0.3]).regret == 0.0
    np.testing.assert_allclose(regret_curve(tr2, v, [1, 2]), [0.7, 0.5])


@settings(max_examples=60)
@given(st.data())
def test_regret_nonnegative(data):
    p = data.draw(st.integers(1, 6))
    n = data.draw(st.integers(1, 30))
    v = data.draw(st.lists(st.floats(0, 1), min_size=p, max_size=p))
    feas = data.draw(st.lists(st.lists(st.booleans(), min_size=p, max_size=p), min_size=n, max_size=n))
    chosen = [data.draw(st.sampled_from([i for i in range(p) if row[i]] or [0])) for row in feas]
    m = regret_metric(fake_trace(feas, chosen), v)
    if m is not None:
        assert m.avg_best >= m.avg_chosen - 1e-15


def test_rate_check_recovers_constant():
    n = np.array([10, 20, 40, 80, 160])
    fit = rate_check(n, 3.0 / n, "1/N")
    assert fit.constant == pytest.approx(3.0) and fit.residual == pytest.approx(0.0, abs=1e-15)
    assert not fit.violated
    fit = rate_check(n, 0.5 * np.log(n) / n, "lnN/N")
    assert fit.constant == pytest.approx(0.5) and not fit.violated


def test_rate_check_flags_constant_curve():
    n = np.array([10, 20, 40, 80, 160])
    assert rate_check(n, np.full(5, 0.1), "1/N").violated
    assert rate_check(n, np.full(5, 0.1), "lnN/N").violated


def test_rate_check_range_and_skip():
    n = np.array([5, 10, 20, 40, 80, 160])
    r = 2.0 / n
    assert rate_check(n, r, "1/N", min_gap=0.1).points == 5
    with pytest.raises(ValueError):
        rate_check(n, r, "1/N", min_gap=0.05)
    assert rate_check(n, r, "1/N", min_gap=None).skipped
    with pytest.raises(ValueError):
        rate_check(n, r, "N^2")


def test_hoeffding_radius():
    assert bounds.hoeffding_radius(100, 0.95) == pytest.approx(math.sqrt(math.log(40) / 200))
