import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glimmlab.errors import EmptyRange
from glimmlab.sampling import (discrepancy, explicit_sequence,
                               pseudorandom_sequence, van_der_corput,
                               vdc_sequence, verify_discrepancy_bound)
from glimmlab.sampling import _scan_python


def test_van_der_corput_first_terms():
    assert van_der_corput(1) == 0.5
    assert van_der_corput(2) == 0.25
    assert van_der_corput(3) == 0.75
    assert van_der_corput(4) == 0.125


@given(st.integers(1, 10 ** 9))
def test_van_der_corput_range(i):
    x = van_der_corput(i)
    assert 0.0 <= x < 1.0


def test_discrepancy_single_point_half():
    rep = discrepancy(explicit_sequence([0.5]), 0, 1)
    assert rep.value == 0.5 and rep.argmax == 0.5


def test_discrepancy_uniform_grid():
    rep = discrepancy(explicit_sequence([0.0, 0.25, 0.5, 0.75]), 0, 4)
    assert rep.value == pytest.approx(0.25)


def test_discrepancy_single_point_zero():
    assert discrepancy(explicit_sequence([0.0]), 0, 1).value == 1.0


def test_discrepancy_empty_range():
    with pytest.raises(EmptyRange):
        discrepancy(vdc_sequence(), 5, 5)


def _brute_discrepancy(points):
    """sup over candidate lambdas: the points themselves and interval ends."""
    pts = np.sort(np.asarray(points))
    k = len(pts)
    best = 0.0
    lams = np.unique(np.concatenate([[0.0, 1.0], pts, pts - 1e-12]))
    lams = lams[(lams >= 0) & (lams <= 1)]
    for lam in lams:
        count = np.sum(pts <= lam)
        best = max(best, abs(lam - count / k))
    return best


def test_sorted_formula_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(500):
        k = int(rng.integers(1, 40))
        pts = rng.uniform(0, 1, k)
        rep = discrepancy(explicit_sequence(pts), 0, k)
        assert rep.value == pytest.approx(_brute_discrepancy(pts), abs=1e-9)


def test_vdc_dyadic_prefix_discrepancy_decreases():
    seq = vdc_sequence()
    prev = np.inf
    for j in range(1, 11):
        d = discrepancy(seq, 0, 2 ** j).value
        assert d < prev
        prev = d


def test_single_point_window_ratio_below_half():
    seq = vdc_sequence()
    for m in range(1, 50):
        rep = discrepancy(seq, m, m + 1)
        assert rep.value <= 1.0 and rep.normalized <= 0.5


def test_vdc_bound_small_window_exhaustive():
    rep = verify_discrepancy_bound(vdc_sequence(), 64)
    assert rep.exhaustive and rep.worst_ratio <= 1.0


def test_constant_sequence_violates_bound():
    rep = verify_discrepancy_bound(explicit_sequence([0.5]), 64)
    assert rep.worst_ratio > 1.0   # D = 0.5 for every window, ratio ~ k/log k


def test_pseudorandom_reported_not_asserted():
    rep = verify_discrepancy_bound(pseudorandom_sequence(0), 128)
    assert np.isfinite(rep.worst_ratio)   # reported only; typically > vdc's


def test_python_and_numba_scan_agree():
    seq = vdc_sequence()
    n_max = 300                      # above the numba switch threshold
    rep = verify_discrepancy_bound(seq, n_max)
    theta = np.array([seq.theta(ell) for ell in range(1, n_max)])
    best, bm, bn = _scan_python(theta, np.arange(0, n_max - 1), n_max - 1)
    assert rep.worst_ratio == pytest.approx(best, abs=1e-14)
    assert (rep.argmax_m, rep.argmax_n) == (bm + 1, bn + 1)


def test_pseudorandom_is_stateless_and_deterministic():
    a = pseudorandom_sequence(7)
    b = pseudorandom_sequence(7)
    assert [a.theta(i) for i in range(10)] == [b.theta(i) for i in range(10)]
    assert a.theta(3) == a.theta(3)
