import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glimmlab.envelope import (PieceKind, SampledFunction, decompose_contact,
                               envelope_oracle, lower_convex_envelope,
                               upper_concave_envelope)
from glimmlab.errors import DegenerateGrid


def sample(f, lo, hi, n):
    t = np.linspace(lo, hi, n)
    return SampledFunction(t, f(t))


def test_cubic_envelope_tangency():
    # lower envelope of u^3 on [-1,1]: chord of slope 3/4 up to u=1/2, then u^3
    f = sample(lambda u: u ** 3, -1.0, 1.0, 9)   # grid contains 1/2
    res = lower_convex_envelope(f)
    t = f.grid
    left = t <= 0.5
    assert np.allclose(res.envelope[left], -1.0 + 0.75 * (t[left] + 1.0), atol=1e-14)
    right = t >= 0.5
    assert np.allclose(res.envelope[right], t[right] ** 3, atol=1e-14)
    assert np.all(np.diff(res.slopes) >= -1e-12)


def test_convex_function_is_its_own_envelope():
    f = sample(lambda u: u ** 2, -1.0, 1.0, 33)
    res = lower_convex_envelope(f)
    assert np.allclose(res.envelope, f.values, atol=1e-15)
    assert res.contact.all()


def test_concave_function_gives_chord():
    f = sample(lambda u: -u ** 2, 0.0, 1.0, 21)
    res = lower_convex_envelope(f)
    assert np.allclose(res.envelope, -f.grid, atol=1e-15)   # chord (0,0)-(1,-1)
    assert res.contact[0] and res.contact[-1]
    assert not res.contact[1:-1].any()


def test_upper_concave_mirrors_lower_convex():
    f = sample(lambda u: u ** 3, -1.0, 1.0, 9)
    res = upper_concave_envelope(f)
    left = f.grid <= -0.5
    assert np.allclose(res.envelope[left], f.grid[left] ** 3, atol=1e-14)
    right = f.grid >= -0.5
    assert np.allclose(res.envelope[right], -0.125 + 0.75 * (f.grid[right] + 0.5),
                       atol=1e-14)
    # reflection duality is exact
    neg = lower_convex_envelope(SampledFunction(f.grid, -f.values))
    assert np.array_equal(res.envelope, -neg.envelope)


def test_upper_concave_trivial_cases():
    conc = sample(lambda u: -u ** 2, -1.0, 1.0, 15)
    assert np.allclose(upper_concave_envelope(conc).envelope, conc.values)
    lin = sample(lambda u: 2 * u + 1, 0.0, 1.0, 7)
    res = upper_concave_envelope(lin)
    assert np.allclose(res.envelope, lin.values)
    assert np.allclose(res.slopes, 2.0)


def test_degenerate_grid_raises():
    with pytest.raises(DegenerateGrid):
        lower_convex_envelope(SampledFunction(np.array([0.0]), np.array([1.0])))
    with pytest.raises(DegenerateGrid):
        SampledFunction(np.array([0.0, 0.0]), np.array([1.0, 2.0]))


def test_decompose_cubic():
    f = sample(lambda u: u ** 3, -1.0, 1.0, 9)
    pieces = decompose_contact(lower_convex_envelope(f))
    assert [p.kind for p in pieces] == [PieceKind.SHOCK_OR_CONTACT,
                                        PieceKind.RAREFACTION]
    assert f.grid[pieces[0].i_lo] == -1.0
    assert f.grid[pieces[0].i_hi] == 0.5
    assert f.grid[pieces[1].i_hi] == 1.0


def test_decompose_convex_single_rarefaction():
    f = sample(lambda u: u ** 2, -1.0, 1.0, 17)
    pieces = decompose_contact(lower_convex_envelope(f))
    assert len(pieces) == 1 and pieces[0].kind is PieceKind.RAREFACTION


def test_decompose_linear_single_flat():
    f = sample(lambda u: 3.0 * u, -1.0, 1.0, 17)
    pieces = decompose_contact(lower_convex_envelope(f))
    assert len(pieces) == 1 and pieces[0].kind is PieceKind.SHOCK_OR_CONTACT


def _random_piecewise_poly(rng, n):
    t = np.sort(rng.uniform(-1, 1, n))
    t += np.arange(n) * 1e-9            # enforce strict increase
    coeffs = rng.normal(size=4)
    y = sum(c * t ** p for p, c in enumerate(coeffs))
    if rng.random() < 0.5:
        y += rng.normal(scale=0.1, size=n)   # rough samples
    return t, y


def test_oracle_equivalence_500_random():
    rng = np.random.default_rng(7)
    for _ in range(500):
        n = int(rng.integers(2, 201))
        t, y = _random_piecewise_poly(rng, n)
        res = lower_convex_envelope(SampledFunction(t, y))
        oracle = envelope_oracle(t, y)
        scale = max(1.0, np.max(np.abs(y)))
        assert np.max(np.abs(res.envelope - oracle)) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=60),
       st.integers(0, 2 ** 31 - 1))
def test_envelope_properties(values, seed):
    rng = np.random.default_rng(seed)
    n = len(values)
    t = np.sort(rng.uniform(0, 1, n))
    t += np.arange(n) * 1e-7
    f = SampledFunction(t, np.array(values))
    res = lower_convex_envelope(f)
    scale = max(1.0, np.max(np.abs(f.values)))
    # minorant
    assert np.all(res.envelope <= f.values + 1e-12 * scale)
    # monotone slopes
    if len(res.slopes) > 1:
        assert np.all(np.diff(res.slopes) >= -1e-9 * scale / np.min(np.diff(t)))
    # idempotence
    again = lower_convex_envelope(SampledFunction(t, res.envelope))
    assert np.max(np.abs(again.envelope - res.envelope)) <= 1e-11 * scale
    # discrete convexity of the envelope
    dt = np.diff(t)
    second = np.diff(res.slopes)
    assert np.all(second >= -1e-9 * scale / np.min(dt))
