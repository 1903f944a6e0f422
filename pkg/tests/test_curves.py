import numpy as np
import pytest

from glimmlab import make_model, solve_curve, curve_right_state, wave_fan_from_curve
from glimmlab.curves import ComponentKind
from glimmlab.errors import DomainEscape


@pytest.fixture(scope="module")
def cubic():
    return make_model("cubic")


@pytest.fixture(scope="module")
def burgers():
    return make_model("burgers")


@pytest.fixture(scope="module")
def psys():
    return make_model("p_system")


def test_burgers_pure_rarefaction(burgers):
    c = solve_curve(burgers, [0.0], 1, 1.0)
    assert np.allclose(c.states[:, 0], c.eta)            # u(t) = uL + t
    assert np.allclose(c.reduced, 0.5 * c.eta ** 2)      # F = f(uL+t) - f(uL)
    mid = 0.5 * (c.eta[1:] + c.eta[:-1])
    assert np.allclose(c.sigma_cells, mid)               # sigma = u, cellwise
    assert np.max(np.abs(c.v)) <= 1e-14


def test_cubic_composed_curve(cubic):
    c = solve_curve(cubic, [-1.0], 1, 2.0)
    assert curve_right_state(c)[0] == pytest.approx(1.0)
    # flat speed 3/4 on [0, 3/2], then 3(t-1)^2
    i_flat = np.nonzero(c.eta[1:] <= 1.5 + 1e-12)[0]
    assert np.allclose(c.sigma_cells[i_flat], 0.75, atol=1e-12)
    late = c.eta[:-1] >= 1.5
    mids = 0.5 * (c.eta[:-1] + c.eta[1:])[late]
    assert np.allclose(c.sigma_cells[late], 3.0 * (mids - 1.0) ** 2, atol=1e-2)
    assert np.all(np.diff(c.sigma_cells) >= -1e-12)


def test_right_state_trivial_cases(cubic):
    c0 = solve_curve(cubic, [0.3], 1, 0.0)
    assert curve_right_state(c0)[0] == pytest.approx(0.3)
    lin = make_model("linear2")
    c = solve_curve(lin, [0.0, 0.0], 1, 0.3)
    assert np.allclose(curve_right_state(c), [0.3, 0.0])  # r_1 = e_1


def test_p_system_curve_converges_on_manifold(psys):
    for s in (0.1, -0.1):
        c = solve_curve(psys, [0.0, 0.0], 2, s, tol=1e-10, max_iter=20)
        assert c.converged and c.iterations <= 20
        assert np.all(np.diff(c.sigma_cells) >= -1e-12)   # monotone speed map
        assert np.linalg.norm(c.states[0] - [0.0, 0.0]) == 0.0


def test_tangency_to_eigenvector(psys):
    s = 1e-3
    for k in (1, 2):
        c = solve_curve(psys, [0.1, -0.05], k, s)
        r = psys.eig(np.array([0.1, -0.05])).right[:, k - 1]
        secant = (c.right_state() - np.array([0.1, -0.05])) / s
        assert np.linalg.norm(secant - r) <= 1e-2


def test_fan_cubic(cubic):
    fan = wave_fan_from_curve(solve_curve(cubic, [-1.0], 1, 2.0))
    kinds = [comp.kind for comp in fan.components]
    assert kinds == [ComponentKind.SHOCK, ComponentKind.RAREFACTION]
    assert fan.components[0].size == pytest.approx(1.5)
    assert fan.components[0].speed == pytest.approx(0.75, abs=1e-9)
    assert fan.components[1].size == pytest.approx(0.5)
    assert sum(comp.size for comp in fan.components) == pytest.approx(fan.size)


def test_fan_burgers_shock_and_rarefaction(burgers):
    rare = wave_fan_from_curve(solve_curve(burgers, [0.0], 1, 1.0))
    assert [c.kind for c in rare.components] == [ComponentKind.RAREFACTION]
    shock = wave_fan_from_curve(solve_curve(burgers, [1.0], 1, -1.0))
    assert [c.kind for c in shock.components] == [ComponentKind.SHOCK]
    assert shock.components[0].speed == pytest.approx(0.5, abs=1e-12)


def test_fan_component_states_chain(psys):
    fan = wave_fan_from_curve(solve_curve(psys, [0.05, 0.0], 2, -0.2))
    comps = fan.components
    for a, b in zip(comps[:-1], comps[1:]):
        assert np.allclose(a.right_state, b.left_state)
    assert np.allclose(comps[0].left_state, fan.left_state)
    assert np.allclose(comps[-1].right_state, fan.right_state)
    speeds = [c.speed_lo for c in comps] + [comps[-1].speed_hi]
    assert np.all(np.diff(speeds) >= -1e-12)


def test_conservative_consistency_of_shocks(cubic, psys):
    # |F(w'') - F(w') - sigma (w''-w')| <= C h |w''-w'| on every shock piece
    for model, uL, k, s in ((cubic, [-1.0], 1, 2.0), (psys, [0.05, 0.0], 2, -0.2),
                            (psys, [-0.1, 0.1], 1, 0.15)):
        c = solve_curve(model, uL, k, s)
        fan = wave_fan_from_curve(c)
        h = c.eta[1] - c.eta[0]
        for comp in fan.components:
            if comp.kind is ComponentKind.RAREFACTION:
                continue
            lhs = np.linalg.norm(
                model.flux(comp.right_state) - model.flux(comp.left_state)
                - comp.speed * (comp.right_state - comp.left_state), ord=1)
            jump = np.linalg.norm(comp.right_state - comp.left_state, ord=1)
            limit = 2.0 * max(h, abs(comp.size) ** 2) * jump
            assert lhs <= max(limit, 1e-12), (model.name, comp.kind, lhs, limit)


def test_scalar_exactness_matches_oleinik(cubic):
    # fan speeds agree with envelope slopes of the flux between the states
    uL, uR = -0.8, 0.9
    c = solve_curve(cubic, [uL], 1, uR - uL)
    grid = uL + c.eta
    fvals = grid ** 3
    from glimmlab.envelope import SampledFunction, lower_convex_envelope
    env = lower_convex_envelope(SampledFunction(grid, fvals))
    assert np.allclose(c.sigma_cells, env.slopes, atol=1e-12)


def test_domain_escape(cubic):
    with pytest.raises(DomainEscape):
        solve_curve(cubic, [1.0], 1, 1.0)   # exits [-1.5, 1.5]
