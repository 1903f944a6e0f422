"""Hyperbolic system models: flux, spectrum, field classification, structure checks.

A model is a strictly hyperbolic N x N system u_t + A(u) u_x = 0 on a box
domain, conservative (A = DF) for every built-in.  Characteristic speeds are
kept raw internally; an affine speed map lam_hat = a*lam + b, fitted once
over a validation grid, renormalizes every family into (0,1) as the
random-choice scheme requires.

Field classification probes d_lam = grad(lam_k) . r_k on a sample grid:
nonvanishing sign means genuinely nonlinear, identically zero means linearly
degenerate, isolated sign changes mark the degenerate manifolds of a
non-genuinely-nonlinear family.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import (AmbiguousClassification, Delta0TooLarge, NotStrictlyHyperbolic,
                     OutOfDomain)

EIG_GAP_MIN = 1e-8
BIORTH_TOL = 1e-10
LD_TOL = 1e-12          # uniform |grad(lam).r| below this means linearly degenerate
SPEED_MARGIN = 0.05     # padding fraction on each side of the raw speed range


class FieldKind(Enum):
    GNL = "GNL"
    LD = "LD"
    NGNL = "NGNL"


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))

    @property
    def dim(self):
        return len(self.lo)

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def extent(self):
        return self.hi - self.lo

    def contains(self, u, tol=1e-9):
        u = np.atleast_1d(u)
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def grid(self, resolution):
        """Product grid with `resolution` points per axis, flattened to (M, N)."""
        axes = [np.linspace(self.lo[i], self.hi[i], resolution) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class ManifoldDescriptor:
    implicit: Callable[[np.ndarray], float]   # component = zero set of this map
    curvature_sign: int                       # sign of second derivative of lam_k along r_k there
    point_on: np.ndarray                      # one state on the component
    label: str = ""


@dataclass(frozen=True)
class FieldInfo:
    index: int                                # 1-based family index
    kind: FieldKind
    manifolds: tuple = ()


@dataclass(frozen=True)
class EigenDecomposition:
    lambdas: np.ndarray        # normalized speeds, strictly increasing, in (0,1)
    raw_lambdas: np.ndarray
    right: np.ndarray          # unit right eigenvectors, columns
    left: np.ndarray           # left eigenvectors, rows; left @ right == I


@dataclass(frozen=True)
class Delta0Report:
    family: int
    delta0: float
    min_abs: float             # min |second derivative| over the sampled neighborhood
    argmin: np.ndarray
    samples: int
    passed: bool = True


class SystemModel:
    """Immutable system description; all operations are pure."""

    def __init__(self, name, jacobian, domain, flux=None, delta0=0.05,
                 manifolds=None, scalar_lambda_vec=None, scalar_flux_vec=None,
                 small_data_bound=None, validation_resolution=41, fd_step=None,
                 lambda_batch=None, right_batch=None):
        self.name = name
        self.domain = domain
        self.N = domain.dim
        self.flux = flux
        self.jacobian = jacobian
        self.conservative = flux is not None
        self.delta0 = float(delta0)
        self.scalar_lambda_vec = scalar_lambda_vec
        self.scalar_flux_vec = scalar_flux_vec
        self.fd_step = fd_step if fd_step is not None else 1e-5 * float(np.max(domain.extent))
        self.small_data_bound = (small_data_bound if small_data_bound is not None
                                 else 0.5 * float(np.min(domain.extent)))
        self._manifolds_supplied = manifolds or {}
        self._lambda_batch = lambda_batch
        self._right_batch = right_batch
        self._ref_right = self._reference_frame()
        self.speed_map = self._fit_speed_map(validation_resolution)
        self.fields = tuple(classify_field(self, k) for k in range(1, self.N + 1))
        self._rp_cache = {}

    # -- spectral frame ----------------------------------------------------

    def _raw_eig(self, u):
        A = np.atleast_2d(np.asarray(self.jacobian(u), dtype=float))
        if self.N == 1:
            return np.array([A[0, 0]]), np.array([[1.0]])
        lam, R = np.linalg.eig(A)
        order = np.argsort(lam.real)
        lam = lam.real[order]
        R = R.real[:, order]
        gaps = np.diff(lam)
        if np.any(gaps < EIG_GAP_MIN):
            raise NotStrictlyHyperbolic(
                f"eigenvalue gap {gaps.min():.3e} below {EIG_GAP_MIN} at u={u}")
        R = R / np.linalg.norm(R, axis=0)
        return lam, R

    def _reference_frame(self):
        _, R = self._raw_eig(self.domain.center)
        for k in range(R.shape[1]):
            lead = np.argmax(np.abs(R[:, k]))
            if R[lead, k] < 0:
                R[:, k] = -R[:, k]
        return R

    def eig(self, u) -> EigenDecomposition:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if not self.domain.contains(u):
            raise OutOfDomain(f"state {u} outside domain of model '{self.name}'")
        lam, R = self._raw_eig(u)
        for k in range(self.N):
            if np.dot(R[:, k], self._ref_right[:, k]) < 0:
                R[:, k] = -R[:, k]
        L = np.linalg.inv(R)
        a, b = self.speed_map
        return EigenDecomposition(lambdas=a * lam + b, raw_lambdas=lam, right=R, left=L)

    def right_unit(self, u, k):
        return self.eig(u).right[:, k - 1]

    def raw_lambda(self, u, k):
        return float(self.eig(u).raw_lambdas[k - 1])

    def lambda_batch(self, U, k):
        """Raw k-th eigenvalue at a batch of states, shape (M,)."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if self._lambda_batch is not None:
            return self._lambda_batch(U, k)
        if self.N == 1 and self.scalar_lambda_vec is not None:
            return self.scalar_lambda_vec(U[:, 0])
        return np.array([self._raw_eig(u)[0][k - 1] for u in U])

    def right_batch(self, U, k):
        """Sign-anchored unit right eigenvectors at a batch of states, (M, N)."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if self._right_batch is not None:
            return self._right_batch(U, k)
        if self.N == 1:
            return np.ones((len(U), 1))
        out = np.empty((len(U), self.N))
        ref = self._ref_right[:, k - 1]
        for i, u in enumerate(U):
            _, R = self._raw_eig(u)
            r = R[:, k - 1]
            out[i] = -r if np.dot(r, ref) < 0 else r
        return out

    # -- speed normalization -----------------------------------------------

    def _fit_speed_map(self, resolution):
        pts = self.domain.grid(min(resolution, max(5, int(20000 ** (1 / self.N)))))
        lam_all = np.array([self._raw_eig(u)[0] for u in pts])
        lo, hi = float(lam_all.min()), float(lam_all.max())
        pad = SPEED_MARGIN * (hi - lo) if hi > lo else max(SPEED_MARGIN * abs(hi), SPEED_MARGIN)
        a = 1.0 / (hi - lo + 2 * pad)
        b = -(lo - pad) * a
        return (a, b)

    def normalize_speed(self, sigma):
        a, b = self.speed_map
        return a * np.asarray(sigma) + b

    def raw_speed(self, sigma_hat):
        a, b = self.speed_map
        return (np.asarray(sigma_hat) - b) / a

    # -- nonlinearity probes -----------------------------------------------

    def _probe_lambda(self, u, k):
        # finite-difference probes may step marginally outside the box; the
        # jacobian formula extends smoothly, so skip the domain check here
        return float(self._raw_eig(np.asarray(u, dtype=float))[0][k - 1])

    def _probe_right(self, u, k):
        _, R = self._raw_eig(np.asarray(u, dtype=float))
        r = R[:, k - 1]
        return -r if np.dot(r, self._ref_right[:, k - 1]) < 0 else r

    def dlam(self, u, k):
        """grad(lam_k) . r_k at u, by a centered difference along r_k."""
        r = self._probe_right(u, k)
        h = self.fd_step
        return (self._probe_lambda(u + h * r, k) - self._probe_lambda(u - h * r, k)) / (2 * h)

    def d2lam(self, u, k):
        """Second derivative of lam_k along r_k, i.e. grad(grad(lam_k).r_k).r_k."""
        r = self._probe_right(u, k)
        h = self.fd_step
        return (self.dlam(u + h * r, k) - self.dlam(u - h * r, k)) / (2 * h)

    def march_r(self, u0, k, direction, max_arc, step):
        """Integral curve of r_k from u0 (midpoint rule); stops at the domain edge."""
        pts = [np.array(u0, dtype=float)]
        u = pts[0]
        n = int(np.ceil(max_arc / step))
        for _ in range(n):
            r = direction * self.right_unit(u, k)
            mid = u + 0.5 * step * r
            if not self.domain.contains(mid):
                break
            u = u + step * direction * self.right_unit(mid, k)
            if not self.domain.contains(u):
                break
            pts.append(u)
        return np.array(pts)

    def field(self, k) -> FieldInfo:
        return self.fields[k - 1]


def classify_field(model: SystemModel, k: int, resolution: int = 41) -> FieldInfo:
    """Classify family k as GNL / LD / NGNL from sampled grad(lam_k).r_k."""
    if not 1 <= k <= model.N:
        raise ValueError(f"family index {k} out of range")
    if model.N == 1:
        pts = model.domain.grid(resolution)
        g = np.array([model.dlam(u, k) for u in pts])
    else:
        # probe along the r_k integral curve through the domain center,
        # where the transversality hypothesis makes zeros simple
        arc = 0.5 * float(np.max(model.domain.extent))
        step = arc / max(resolution, 8)
        fwd = model.march_r(model.domain.center, k, +1.0, arc, step)
        bwd = model.march_r(model.domain.center, k, -1.0, arc, step)
        pts = np.vstack([bwd[::-1], fwd[1:]])
        g = np.array([model.dlam(u, k) for u in pts])

    gmax = float(np.max(np.abs(g)))
    if gmax <= LD_TOL:
        return FieldInfo(index=k, kind=FieldKind.LD)
    # compare consecutive nonzero-sign samples so a node sitting exactly on a
    # manifold does not mask the crossing
    nz = np.nonzero(np.abs(g) > 1e-3 * LD_TOL + 0.0)[0]
    nz = nz[np.abs(g[nz]) > 1e-9 * gmax]
    crossings = [(nz[i], nz[i + 1]) for i in range(len(nz) - 1)
                 if g[nz[i]] * g[nz[i + 1]] < 0]
    if len(crossings) == 0:
        if float(np.min(np.abs(g))) <= 1e-6 * gmax:
            raise AmbiguousClassification(
                f"family {k}: grad(lam).r touches zero without crossing")
        return FieldInfo(index=k, kind=FieldKind.GNL)

    if k in model._manifolds_supplied:
        return FieldInfo(index=k, kind=FieldKind.NGNL,
                         manifolds=tuple(model._manifolds_supplied[k]))

    descriptors = []
    for ia, ib in crossings:
        a, b = pts[ia], pts[ib]
        for _ in range(60):   # bisection along the probe segment
            m = 0.5 * (a + b)
            if model.dlam(m, k) * model.dlam(a, k) <= 0:
                b = m
            else:
                a = m
        zero = 0.5 * (a + b)
        curv = model.d2lam(zero, k)
        if abs(curv) <= LD_TOL:
            raise AmbiguousClassification(
                f"family {k}: non-transversal zero of grad(lam).r at {zero}")
        descriptors.append(ManifoldDescriptor(
            implicit=_offset_dlam(model, k), curvature_sign=int(np.sign(curv)),
            point_on=zero, label=f"detected@{np.round(zero, 6)}"))
    return FieldInfo(index=k, kind=FieldKind.NGNL, manifolds=tuple(descriptors))


def _offset_dlam(model, k):
    def g(u):
        return model.dlam(u, k)
    return g


def validate_delta0(model: SystemModel, k: int, samples: int = 25) -> Delta0Report:
    """Check that the second derivative of lam_k along r_k keeps one sign on
    the 6*delta0 neighborhood (along r_k) of every component of family k's
    degenerate manifold; returns the minimum magnitude found."""
    info = model.field(k)
    if info.kind is not FieldKind.NGNL:
        raise ValueError(f"family {k} of '{model.name}' is {info.kind.value}, not NGNL")
    reach = 6.0 * model.delta0
    min_abs, argmin = np.inf, None
    count = 0
    for desc in info.manifolds:
        step = max(reach / (samples // 2), 1e-6)
        fwd = model.march_r(desc.point_on, k, +1.0, reach, step)
        bwd = model.march_r(desc.point_on, k, -1.0, reach, step)
        path = np.vstack([bwd[::-1], fwd[1:]])
        vals = np.array([model.d2lam(u, k) for u in path])
        signs = np.sign(vals)
        signs = signs[np.abs(vals) > 0]
        if len(signs) and (np.any(vals == 0.0) or np.any(signs != signs[0])):
            bad = path[int(np.argmin(np.abs(vals)))]
            raise Delta0TooLarge(
                f"family {k}: second derivative changes sign within "
                f"6*delta0={reach:.4g} of component {desc.label or desc.point_on}",
                point=bad)
        count += len(vals)
        i = int(np.argmin(np.abs(vals)))
        if abs(vals[i]) < min_abs:
            min_abs, argmin = float(abs(vals[i])), path[i]
    return Delta0Report(family=k, delta0=model.delta0, min_abs=min_abs,
                        argmin=argmin, samples=count)


# -- built-in models --------------------------------------------------------

def _scalar_model(name, f, fprime, fsecond, domain, delta0, manifold_points=None,
                  curvature=None, **kw):
    def flux(u):
        return np.array([f(float(np.atleast_1d(u)[0]))])

    def jac(u):
        return np.array([[fprime(float(np.atleast_1d(u)[0]))]])

    manifolds = None
    if manifold_points:
        descs = []
        for p in manifold_points:
            descs.append(ManifoldDescriptor(
                implicit=(lambda p0: (lambda u: float(np.atleast_1d(u)[0]) - p0))(p),
                curvature_sign=int(np.sign(fsecond(p + 1e-9) if curvature is None
                                           else curvature(p))),
                point_on=np.array([p]), label=f"u={p}"))
        manifolds = {1: descs}
    return SystemModel(name, jac, domain, flux=flux, delta0=delta0,
                       manifolds=manifolds,
                       scalar_lambda_vec=np.vectorize(fprime, otypes=[float]),
                       scalar_flux_vec=np.vectorize(f, otypes=[float]), **kw)


def burgers(domain=(-1.5, 1.5), delta0=0.05):
    lo, hi = domain
    return _scalar_model("burgers", lambda u: 0.5 * u * u, lambda u: u,
                         lambda u: 1.0, Box(np.array([lo]), np.array([hi])),
                         delta0, small_data_bound=0.97 * (hi - lo))


def cubic(domain=(-1.5, 1.5), delta0=0.05):
    lo, hi = domain
    return _scalar_model("cubic", lambda u: u ** 3, lambda u: 3.0 * u * u,
                         lambda u: 6.0 * u, Box(np.array([lo]), np.array([hi])),
                         delta0, manifold_points=[0.0],
                         curvature=lambda p: 6.0,
                         small_data_bound=0.97 * (hi - lo))


def quartic(domain=(-1.5, 1.5), delta0=0.05):
    # speed lam(u) = u^4/4 - u^2/2; flux is its antiderivative
    lo, hi = domain
    return _scalar_model("quartic", lambda u: u ** 5 / 20.0 - u ** 3 / 6.0,
                         lambda u: u ** 4 / 4.0 - u ** 2 / 2.0,
                         lambda u: u ** 3 - u, Box(np.array([lo]), np.array([hi])),
                         delta0, manifold_points=[-1.0, 0.0, 1.0],
                         curvature=lambda p: 3.0 * p * p - 1.0,
                         small_data_bound=0.97 * (hi - lo))


def p_system(domain=((-0.6, 0.6), (-0.6, 0.6)), delta0=0.05):
    # state (v, u), flux (-u, p(v)) with p(v) = -(v + v^3/3); both fields are
    # non-genuinely-nonlinear through v = 0
    (vlo, vhi), (ulo, uhi) = domain

    def flux(w):
        v, u = float(w[0]), float(w[1])
        return np.array([-u, -(v + v ** 3 / 3.0)])

    def jac(w):
        v = float(w[0])
        return np.array([[0.0, -1.0], [-(1.0 + v * v), 0.0]])

    box = Box(np.array([vlo, ulo]), np.array([vhi, uhi]))
    descs = {}
    for k, sgn in ((1, -1), (2, +1)):
        descs[k] = [ManifoldDescriptor(implicit=lambda w: float(w[0]),
                                       curvature_sign=sgn,
                                       point_on=np.array([0.0, 0.0]), label="v=0")]

    def lam_b(U, k):
        c = np.sqrt(1.0 + U[:, 0] ** 2)
        return -c if k == 1 else c

    def right_b(U, k):
        c = np.sqrt(1.0 + U[:, 0] ** 2)
        norm = np.sqrt(1.0 + c * c)
        second = c if k == 1 else -c
        return np.stack([1.0 / norm, second / norm], axis=1)

    return SystemModel("p_system", jac, box, flux=flux, delta0=delta0,
                       manifolds=descs, small_data_bound=0.45 * (vhi - vlo),
                       lambda_batch=lam_b, right_batch=right_b)


def linear2(domain=((-1.0, 1.0), (-1.0, 1.0)), speeds=(0.25, 0.75)):
    (xlo, xhi), (ylo, yhi) = domain
    A = np.diag(np.asarray(speeds, dtype=float))

    def flux(u):
        return A @ np.asarray(u, dtype=float)

    def jac(u):
        return A

    box = Box(np.array([xlo, ylo]), np.array([xhi, yhi]))
    spd = np.asarray(speeds, dtype=float)

    def lam_b(U, k):
        return np.full(len(U), spd[k - 1])

    def right_b(U, k):
        out = np.zeros((len(U), 2))
        out[:, k - 1] = 1.0
        return out

    return SystemModel("linear2", jac, box, flux=flux, delta0=0.05,
                       small_data_bound=0.9 * (xhi - xlo),
                       lambda_batch=lam_b, right_batch=right_b)


MODEL_REGISTRY = {
    "burgers": burgers,
    "cubic": cubic,
    "quartic": quartic,
    "p_system": p_system,
    "linear2": linear2,
}


def make_model(name, **params) -> SystemModel:
    try:
        builder = MODEL_REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model '{name}'; choices: {sorted(MODEL_REGISTRY)}")
    return builder(**params)
