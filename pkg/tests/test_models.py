import numpy as np
import pytest

from glimmlab import make_model, validate_delta0
from glimmlab.errors import Delta0TooLarge, NotStrictlyHyperbolic, OutOfDomain
from glimmlab.models import Box, FieldKind, SystemModel, classify_field


@pytest.fixture(scope="module")
def models():
    return {name: make_model(name) for name in
            ("burgers", "cubic", "quartic", "p_system", "linear2")}


def test_eig_cubic_at_one(models):
    m = models["cubic"]
    dec = m.eig(np.array([1.0]))
    assert dec.raw_lambdas[0] == pytest.approx(3.0)
    a, b = m.speed_map
    assert dec.lambdas[0] == pytest.approx(a * 3.0 + b)
    assert 0.0 < dec.lambdas[0] < 1.0
    assert dec.right[0, 0] == 1.0 and dec.left[0, 0] == 1.0


def test_eig_linear_diagonal(models):
    dec = models["linear2"].eig(np.array([0.3, -0.2]))
    assert np.allclose(dec.raw_lambdas, [0.25, 0.75])
    assert np.allclose(np.abs(dec.right), np.eye(2))


def test_eig_p_system_origin(models):
    dec = models["p_system"].eig(np.array([0.0, 0.0]))
    assert np.allclose(dec.raw_lambdas, [-1.0, 1.0])
    # biorthonormality
    assert np.max(np.abs(dec.left @ dec.right - np.eye(2))) <= 1e-10


def test_eig_out_of_domain(models):
    with pytest.raises(OutOfDomain):
        models["cubic"].eig(np.array([7.0]))


def test_normalized_speeds_in_unit_interval(models):
    for m in models.values():
        for u in m.domain.grid(9):
            dec = m.eig(u)
            assert np.all(dec.lambdas > 0.0) and np.all(dec.lambdas < 1.0)
            assert np.all(np.diff(dec.lambdas) > 0)
            assert np.max(np.abs(dec.left @ dec.right - np.eye(m.N))) <= 1e-10


def test_classification(models):
    assert models["burgers"].field(1).kind is FieldKind.GNL
    cubic = models["cubic"].field(1)
    assert cubic.kind is FieldKind.NGNL and len(cubic.manifolds) == 1
    quartic = models["quartic"].field(1)
    assert quartic.kind is FieldKind.NGNL and len(quartic.manifolds) == 3
    assert sorted(d.point_on[0] for d in quartic.manifolds) == [-1.0, 0.0, 1.0]
    for k in (1, 2):
        assert models["p_system"].field(k).kind is FieldKind.NGNL
        assert models["linear2"].field(k).kind is FieldKind.LD


def test_classification_stable_under_refinement(models):
    m = models["quartic"]
    for res in (41, 81, 161):
        info = classify_field(m, 1, resolution=res)
        assert info.kind is FieldKind.NGNL and len(info.manifolds) == 3


def test_detected_manifolds_without_analytic_descriptors():
    # same quartic speed law, but without handing over the manifold list
    def f(u):
        return np.array([u ** 5 / 20.0 - u ** 3 / 6.0])

    def jac(u):
        x = float(np.atleast_1d(u)[0])
        return np.array([[x ** 4 / 4.0 - x ** 2 / 2.0]])

    m = SystemModel("quartic_raw", jac, Box(np.array([-1.5]), np.array([1.5])),
                    flux=f, delta0=0.05,
                    scalar_lambda_vec=np.vectorize(
                        lambda u: u ** 4 / 4.0 - u ** 2 / 2.0, otypes=[float]))
    info = m.field(1)
    assert info.kind is FieldKind.NGNL
    zeros = sorted(d.point_on[0] for d in info.manifolds)
    assert np.allclose(zeros, [-1.0, 0.0, 1.0], atol=1e-6)
    signs = [d.curvature_sign for d in sorted(info.manifolds,
                                              key=lambda d: d.point_on[0])]
    assert signs == [1, -1, 1]


def test_validate_delta0_cubic_passes(models):
    rep = validate_delta0(models["cubic"], 1)
    assert rep.passed and rep.min_abs == pytest.approx(6.0, rel=1e-4)


def test_validate_delta0_quartic():
    ok = make_model("quartic", delta0=0.05)
    rep = validate_delta0(ok, 1)
    assert rep.passed and rep.min_abs > 0
    # 6 * 0.3 = 1.8 reaches past the sign changes of the second derivative
    # at |u| = 1/sqrt(3) from every component
    bad = make_model("quartic", delta0=0.3)
    with pytest.raises(Delta0TooLarge):
        validate_delta0(bad, 1)


def test_validate_delta0_rejects_gnl(models):
    with pytest.raises(ValueError):
        validate_delta0(models["burgers"], 1)


def test_not_strictly_hyperbolic():
    def jac(u):
        return np.array([[0.5, 0.0], [0.0, 0.5]])

    with pytest.raises(NotStrictlyHyperbolic):
        SystemModel("degenerate", jac, Box(np.array([-1, -1]), np.array([1, 1])),
                    flux=lambda u: 0.5 * np.asarray(u))


def test_batch_hooks_match_pointwise(models):
    for name in ("p_system", "linear2"):
        m = models[name]
        pts = m.domain.grid(5)
        for k in (1, 2):
            lam = m.lambda_batch(pts, k)
            r = m.right_batch(pts, k)
            for i, u in enumerate(pts):
                dec = m.eig(u)
                assert lam[i] == pytest.approx(dec.raw_lambdas[k - 1], abs=1e-12)
                assert np.allclose(r[i], dec.right[:, k - 1], atol=1e-10)
