"""Elementary wave curves: states, speed map and reduced flux of one family.

For a left state uL and signed size s, the curve is the fixed point of

    u(t)     = uL + dir * int_0^t r_k(u)            (t = arc parameter in [0,|s|])
    H(t)     = int_0^t lam_k(u)                     (reduced flux)
    sigma(t) = d/dt conv H(t)                       (wave-speed map)
    v(t)     = dir * (H(t) - conv H(t))

where dir = sign(s) and conv is the lower convex envelope on [0,|s|].  For
s < 0 this arc parametrization is the reflection t = -tau of the construction
on [s,0]; the upper concave envelope there turns into the lower convex
envelope of H here, so a single code path covers both signs and sigma is
always nondecreasing in t.

The speed map is kept in raw units; normalization to (0,1) is applied by
callers through the model's speed map.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .envelope import (EnvelopeResult, PieceKind, SampledFunction,
                       decompose_contact, lower_convex_envelope)
from .errors import DomainEscape, NoConvergence

DEFAULT_GRID_MIN = 64
# pitch cap: sampled fan values are quantized to curve nodes, so the state
# resolution of large fans (hence the error floor of long runs) is h_min
DEFAULT_H_MIN = 1.0 / 512.0
DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 80
ZERO_SIZE = 1e-12
CONTACT_V_TOL = 1e-9


class ComponentKind(Enum):
    SHOCK = "shock"
    CONTACT = "contact"
    RAREFACTION = "rarefaction"


@dataclass(frozen=True)
class WaveComponent:
    kind: ComponentKind
    size: float                 # signed
    left_state: np.ndarray
    right_state: np.ndarray
    speed_lo: float             # raw; speed_lo == speed_hi for shocks/contacts
    speed_hi: float
    i_lo: int                   # node index range on the parent curve grid
    i_hi: int

    @property
    def is_flat(self):
        return self.kind is not ComponentKind.RAREFACTION

    @property
    def speed(self):
        return 0.5 * (self.speed_lo + self.speed_hi)


@dataclass(frozen=True)
class WaveFan:
    family: int
    size: float
    left_state: np.ndarray
    right_state: np.ndarray
    components: tuple
    curve: "ElementaryCurve"

    @property
    def min_speed(self):
        return self.components[0].speed_lo if self.components else np.nan

    @property
    def max_speed(self):
        return self.components[-1].speed_hi if self.components else np.nan

    @property
    def rarefaction_size(self):
        return sum(c.size for c in self.components
                   if c.kind is ComponentKind.RAREFACTION)

    @property
    def shock_size(self):
        return sum(c.size for c in self.components if c.is_flat)


@dataclass
class ElementaryCurve:
    model: object
    family: int
    u_left: np.ndarray
    size: float                  # signed total size s
    eta: np.ndarray              # arc grid on [0, |s|]
    states: np.ndarray           # (n+1, N)
    reduced: np.ndarray          # H on eta
    env: np.ndarray              # conv H on eta
    sigma_cells: np.ndarray      # raw envelope slopes per cell, nondecreasing
    v: np.ndarray                # signed gap dir * (H - conv H)
    contact: np.ndarray          # bool mask per node
    converged: bool
    residual: float
    iterations: int

    @property
    def direction(self):
        return 1.0 if self.size >= 0 else -1.0

    @property
    def arc(self):
        return abs(self.size)

    def right_state(self):
        return self.states[-1]

    def state_at(self, t):
        """Linear interpolation of the state path at arc position t."""
        out = np.empty(self.states.shape[1])
        for c in range(self.states.shape[1]):
            out[c] = np.interp(t, self.eta, self.states[:, c])
        return out

    def env_at(self, t):
        """conv H at arc position t (exact: the envelope is piecewise linear)."""
        return float(np.interp(t, self.eta, self.env))

    def reduced_at(self, t):
        return float(np.interp(t, self.eta, self.reduced))

    def sigma_at(self, t):
        """Raw speed at arc position t (cell value; right-continuous)."""
        i = int(np.searchsorted(self.eta, t, side="right")) - 1
        i = min(max(i, 0), len(self.sigma_cells) - 1)
        return float(self.sigma_cells[i])

    def sigma_hat_cells(self):
        return self.model.normalize_speed(self.sigma_cells)

    def integral_sigma(self, a=None, b=None):
        """Raw integral of sigma over arc [a,b]; defaults to the whole curve."""
        a = 0.0 if a is None else a
        b = self.arc if b is None else b
        return self.env_at(b) - self.env_at(a)

    def mean_sigma(self, a, b):
        if b <= a:
            return self.sigma_at(a)
        return self.integral_sigma(a, b) / (b - a)


def _cumtrapz(y, x):
    out = np.zeros(len(x))
    if len(x) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def grid_size(s, grid_n=None, h_min=DEFAULT_H_MIN):
    if grid_n is not None:
        return int(grid_n)
    return max(DEFAULT_GRID_MIN, int(np.ceil(abs(s) / h_min)))


def solve_curve(model, u_left, k, s, grid_n=None, tol=DEFAULT_TOL,
                max_iter=DEFAULT_MAX_ITER) -> ElementaryCurve:
    """Fixed point of the elementary-curve system for family k, signed size s."""
    u_left = np.atleast_1d(np.asarray(u_left, dtype=float))
    n = grid_size(s, grid_n)
    arc = abs(float(s))
    sgn = 1.0 if s >= 0 else -1.0
    eta = np.linspace(0.0, max(arc, ZERO_SIZE), n + 1)
    if arc < ZERO_SIZE:
        # degenerate zero wave: constant curve
        states = np.repeat(u_left[None, :], n + 1, axis=0)
        lam = model.lambda_batch(states, k)
        H = _cumtrapz(lam, eta)
        return _finish(model, k, u_left, float(s), eta, states, H, True, 0.0, 0)

    if model.N == 1:
        # r == 1 identically: the state path is exact in one pass, and for a
        # conservative scalar flux the reduced flux is an exact difference
        states = u_left[None, :] + sgn * eta[:, None]
        if not (model.domain.contains(states[0]) and model.domain.contains(states[-1])):
            raise DomainEscape(f"scalar curve from {u_left} (s={s}) leaves the domain")
        if model.scalar_flux_vec is not None:
            fv = model.scalar_flux_vec(states[:, 0])
            H = sgn * (fv - fv[0])
        else:
            H = _cumtrapz(model.lambda_batch(states, k), eta)
        return _finish(model, k, u_left, float(s), eta, states, H, True, 0.0, 1)

    r0 = model.right_batch(u_left[None, :], k)[0]
    states = u_left[None, :] + sgn * eta[:, None] * r0[None, :]
    prev_res = np.inf
    H = np.zeros(n + 1)
    sig = np.zeros(n)
    env_res = None
    for it in range(1, max_iter + 1):
        if not all(model.domain.contains(states[j]) for j in (0, n // 2, n)):
            raise DomainEscape(f"curve of family {k} from {u_left} (s={s}) left the domain")
        r = model.right_batch(states, k)
        new_states = u_left[None, :] + sgn * _cumtrapz_vec(r, eta)
        lam = model.lambda_batch(new_states, k)
        H_new = _cumtrapz(lam, eta)
        env_res = lower_convex_envelope(SampledFunction(eta, H_new))
        sig_new = env_res.slopes
        if it == 1:
            res = np.inf
        else:
            res = max(float(np.max(np.abs(new_states - states))),
                      float(np.max(np.abs(H_new - H))),
                      float(np.max(np.abs(sig_new - sig))))
            if res > prev_res:
                # damp oscillations of the plain Picard step
                new_states = 0.5 * (states + new_states)
                lam = model.lambda_batch(new_states, k)
                H_new = _cumtrapz(lam, eta)
                env_res = lower_convex_envelope(SampledFunction(eta, H_new))
                sig_new = env_res.slopes
        states, H, sig = new_states, H_new, sig_new
        if res <= tol:
            stride = max(n // 8, 1)
            if not all(model.domain.contains(states[j]) for j in range(0, n + 1, stride)):
                raise DomainEscape(f"curve of family {k} from {u_left} (s={s}) left the domain")
            return _finish(model, k, u_left, float(s), eta, states, H, True, res, it,
                           env_res)
        prev_res = res
    raise NoConvergence(f"curve fixed point stalled at residual {prev_res:.3e}",
                        residual=prev_res)


def _cumtrapz_vec(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x)[:, None], axis=0)
    return out


def _finish(model, k, u_left, s, eta, states, H, converged, residual, iterations,
            env_res=None):
    if env_res is None:
        env_res = lower_convex_envelope(SampledFunction(eta, H))
    sgn = 1.0 if s >= 0 else -1.0
    return ElementaryCurve(
        model=model, family=k, u_left=u_left, size=s, eta=eta, states=states,
        reduced=H, env=env_res.envelope, sigma_cells=env_res.slopes,
        v=sgn * (H - env_res.envelope), contact=env_res.contact,
        converged=converged, residual=residual, iterations=iterations)


def curve_right_state(curve: ElementaryCurve):
    if not curve.converged:
        raise NoConvergence("curve did not converge", residual=curve.residual)
    return curve.right_state()


def slice_curve(curve: ElementaryCurve, i_lo: int, i_hi: int) -> ElementaryCurve:
    """Restriction of the curve to the node range [i_lo, i_hi].

    When i_lo and i_hi are supporting nodes of the convex envelope (sampling
    cuts always are: the envelope slope jumps there), the sliced envelope is
    exactly the restriction of the parent's, so component sizes stay
    additive to rounding under a split.
    """
    if not 0 <= i_lo < i_hi <= len(curve.eta) - 1:
        raise ValueError(f"bad slice [{i_lo}, {i_hi}]")
    eta = curve.eta[i_lo:i_hi + 1] - curve.eta[i_lo]
    states = curve.states[i_lo:i_hi + 1]
    H = curve.reduced[i_lo:i_hi + 1] - curve.reduced[i_lo]
    size = curve.direction * eta[-1]
    return _finish(curve.model, curve.family, states[0], float(size), eta,
                   states, H, curve.converged, curve.residual, curve.iterations)


def wave_fan_from_curve(curve: ElementaryCurve, tol=CONTACT_V_TOL) -> WaveFan:
    """Partition the curve into shock/contact/rarefaction components."""
    sgn = curve.direction
    env_res = EnvelopeResult(base=SampledFunction(curve.eta, curve.reduced),
                             envelope=curve.env, contact=curve.contact,
                             slopes=curve.sigma_cells,
                             hull=np.empty(0, dtype=np.intp))
    pieces = decompose_contact(env_res)
    scale = max(float(np.max(np.abs(curve.reduced))), 1.0)
    comps = []
    for p in pieces:
        i_lo, i_hi = p.i_lo, p.i_hi
        size = sgn * (curve.eta[i_hi] - curve.eta[i_lo])
        if abs(size) < ZERO_SIZE:
            continue
        if p.kind is PieceKind.RAREFACTION:
            kind = ComponentKind.RAREFACTION
            lo = float(curve.sigma_cells[i_lo])
            hi = float(curve.sigma_cells[i_hi - 1])
        else:
            gap = np.max(np.abs(curve.v[i_lo:i_hi + 1]))
            kind = ComponentKind.CONTACT if gap <= tol * scale else ComponentKind.SHOCK
            # single chord slope of the envelope over the flat run
            lo = hi = float((curve.env[i_hi] - curve.env[i_lo]) /
                            (curve.eta[i_hi] - curve.eta[i_lo]))
        comps.append(WaveComponent(kind=kind, size=size,
                                   left_state=curve.states[i_lo],
                                   right_state=curve.states[i_hi],
                                   speed_lo=lo, speed_hi=hi, i_lo=i_lo, i_hi=i_hi))
    return WaveFan(family=curve.family, size=curve.size,
                   left_state=curve.states[0], right_state=curve.states[-1],
                   components=tuple(comps), curve=curve)
