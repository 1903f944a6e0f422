"""Convex/concave envelopes of sampled scalar functions.

The lower convex envelope of samples (t_i, f_i) is the greatest convex
minorant of the point set, evaluated on the same grid.  Its derivative is a
nondecreasing, piecewise constant slope field; flat runs of that field mark
shock/contact intervals of the wave construction, strictly increasing runs
on the contact set mark rarefactions.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateGrid

# relative tolerance deciding whether the envelope touches the samples
CONTACT_RTOL = 1e-12
# per-cell slope increase below strict_tol * (slope range) counts as flat
DEFAULT_STRICT_TOL = 1e-10


class PieceKind(Enum):
    RAREFACTION = "rarefaction"
    SHOCK_OR_CONTACT = "shock_or_contact"


@dataclass(frozen=True)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if g.ndim != 1 or g.shape != v.shape:
            raise DegenerateGrid("grid and values must be 1-D of equal length")
        if len(g) >= 2 and np.any(np.diff(g) <= 0):
            raise DegenerateGrid("grid must be strictly increasing")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
            raise DegenerateGrid("grid/values must be finite")


@dataclass(frozen=True)
class EnvelopeResult:
    base: SampledFunction
    envelope: np.ndarray          # envelope values on base.grid
    contact: np.ndarray           # bool per node: envelope touches samples
    slopes: np.ndarray            # per cell, nondecreasing (lower) / nonincreasing (upper)
    hull: np.ndarray              # indices of supporting nodes
    lower: bool = True

    @property
    def gap(self):
        return self.base.values - self.envelope


@dataclass(frozen=True)
class ContactPiece:
    i_lo: int                     # node index of left edge
    i_hi: int                     # node index of right edge
    kind: PieceKind

    def interval(self, grid):
        return grid[self.i_lo], grid[self.i_hi]


def lower_convex_envelope(f: SampledFunction) -> EnvelopeResult:
    """Greatest convex minorant of the samples, by one monotone sweep."""
    t, y = f.grid, f.values
    n = len(t)
    if n < 2:
        raise DegenerateGrid("need at least 2 grid points")
    hull = [0]
    for i in range(1, n):
        # pop while the previous vertex lies on or above chord hull[-2] -> i
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (y[b] - y[a]) * (t[i] - t[a]) >= (y[i] - y[a]) * (t[b] - t[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    hull = np.asarray(hull, dtype=np.intp)
    env = np.interp(t, t[hull], y[hull])
    env = np.minimum(env, y)      # guard rounding: minorant by construction
    scale = max(np.max(np.abs(y)), 1.0)
    contact = (y - env) <= CONTACT_RTOL * scale
    slopes = np.diff(env) / np.diff(t)
    return EnvelopeResult(base=f, envelope=env, contact=contact,
                          slopes=slopes, hull=hull, lower=True)


def upper_concave_envelope(f: SampledFunction) -> EnvelopeResult:
    """Least concave majorant: negate, take the lower envelope, negate."""
    neg = SampledFunction(f.grid, -f.values)
    res = lower_convex_envelope(neg)
    return EnvelopeResult(base=f, envelope=-res.envelope, contact=res.contact,
                          slopes=-res.slopes, hull=res.hull, lower=False)


def decompose_contact(env: EnvelopeResult, strict_tol: float = DEFAULT_STRICT_TOL):
    """Split the envelope into maximal rarefaction / shock-or-contact pieces.

    A cell belongs to a rarefaction when the envelope touches the samples at
    both of its nodes and its slope differs from every neighbouring cell's
    slope; cells in flat slope runs, or with the envelope strictly below the
    samples, are shock-or-contact.  Isolated touching nodes inside a flat run
    are absorbed into the shock piece.
    """
    slopes, contact = env.slopes, env.contact
    m = len(slopes)
    srange = float(np.max(slopes) - np.min(slopes)) if m else 0.0
    smag = float(np.max(np.abs(slopes))) if m else 0.0
    # slope magnitude floors the scale: a numerically linear envelope must
    # not fragment on cumulative-sum rounding noise
    thr = strict_tol * max(srange, smag)
    flat_join = np.abs(np.diff(slopes)) <= thr   # cell i joined with cell i+1
    kinds = []
    for i in range(m):
        joined = (i > 0 and flat_join[i - 1]) or (i < m - 1 and flat_join[i])
        if contact[i] and contact[i + 1] and not joined:
            kinds.append(PieceKind.RAREFACTION)
        else:
            kinds.append(PieceKind.SHOCK_OR_CONTACT)
    pieces = []
    start = 0
    for i in range(1, m + 1):
        if i == m or kinds[i] != kinds[start]:
            pieces.append(ContactPiece(i_lo=start, i_hi=i, kind=kinds[start]))
            start = i
    return pieces


def envelope_oracle(t, y):
    """Greatest-affine-minorant construction (O(n^2)), used as test oracle.

    From the current support point, follow the steepest affine minorant of
    the remaining samples; this wraps the lower hull one support point at a
    time, independently of the sweep in lower_convex_envelope.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(t)
    env = np.empty(n)
    env[0] = y[0]
    i = 0
    while i < n - 1:
        slopes = (y[i + 1:] - y[i]) / (t[i + 1:] - t[i])
        off = int(np.argmin(slopes))
        j = i + 1 + off
        env[i + 1:j + 1] = y[i] + slopes[off] * (t[i + 1:j + 1] - t[i])
        i = j
    return env
