"""Random-choice (Glimm) evolution on a uniform space-time grid.

With mesh dx = dt = eps and normalized speeds inside (0,1), the exact
evolution of a cellwise-constant profile over one step is the disjoint union
of cell-confined Riemann fans, one per interface.  The restart at time
(i+1) eps samples each fan at the self-similar coordinate theta_{i+1}:

    new cell j = (fan at interface j) evaluated at xi_hat = theta.

Cell j covers [j eps, (j+1) eps]; the fan at interface j sits at x = j eps
between cells j-1 and j, and stays inside cell j for one step.
"""

from dataclasses import dataclass, field

import numpy as np

from .curves import ComponentKind, slice_curve, wave_fan_from_curve
from .errors import (CFLViolation, TVBudgetExceeded, WindowTooSmall)
from .riemann import (RiemannSolution, STATE_SNAP, evaluate_solution,
                      solution_from_fans, solve_riemann)

DEFAULT_TV_BUDGET = 0.6


# -- initial data ------------------------------------------------------------

@dataclass(frozen=True)
class InitialData:
    """Cellwise-sampleable initial condition with constant far field."""
    fn: object                   # callable x -> state array
    left: np.ndarray             # state for x -> -inf
    right: np.ndarray            # state for x -> +inf
    support: tuple               # (a, b): fn equals the far fields outside

    def __call__(self, x):
        if x < self.support[0]:
            return self.left
        if x > self.support[1]:
            return self.right
        return np.atleast_1d(np.asarray(self.fn(x), dtype=float))


def riemann_ic(u_left, u_right) -> InitialData:
    uL = np.atleast_1d(np.asarray(u_left, dtype=float))
    uR = np.atleast_1d(np.asarray(u_right, dtype=float))
    return InitialData(fn=lambda x: uL if x < 0 else uR, left=uL, right=uR,
                       support=(0.0, 0.0))


def piecewise_constant_ic(breaks, states) -> InitialData:
    breaks = [float(b) for b in breaks]
    states = [np.atleast_1d(np.asarray(s, dtype=float)) for s in states]
    if len(states) != len(breaks) + 1:
        raise ValueError("need one more state than breakpoints")

    def fn(x):
        i = int(np.searchsorted(breaks, x, side="right"))
        return states[i]

    return InitialData(fn=fn, left=states[0], right=states[-1],
                       support=(breaks[0], breaks[-1]))


def function_ic(fn, support, left=None, right=None) -> InitialData:
    a, b = support
    left = np.atleast_1d(np.asarray(fn(a - 1e-9) if left is None else left, dtype=float))
    right = np.atleast_1d(np.asarray(fn(b + 1e-9) if right is None else right, dtype=float))
    return InitialData(fn=fn, left=left, right=right, support=(a, b))


# -- grid profile ------------------------------------------------------------

@dataclass(frozen=True)
class GridProfile:
    eps: float
    time_index: int
    j_lo: int
    cells: np.ndarray            # (m, N); cell j_lo + i
    left_bg: np.ndarray
    right_bg: np.ndarray

    @property
    def j_hi(self):
        return self.j_lo + len(self.cells) - 1

    @property
    def n_components(self):
        return self.cells.shape[1]

    def state(self, j):
        if j < self.j_lo:
            return self.left_bg
        if j > self.j_hi:
            return self.right_bg
        return self.cells[j - self.j_lo]

    def x_left(self, j):
        return j * self.eps

    def total_variation(self):
        seq = np.vstack([self.left_bg[None, :], self.cells, self.right_bg[None, :]])
        return float(np.sum(np.abs(np.diff(seq, axis=0))))

    def trimmed(self):
        lo, hi = 0, len(self.cells)
        while lo < hi and np.array_equal(self.cells[lo], self.left_bg):
            lo += 1
        while hi > lo and np.array_equal(self.cells[hi - 1], self.right_bg):
            hi -= 1
        # an empty window is a pure background step with its jump at j_lo + lo
        return GridProfile(self.eps, self.time_index, self.j_lo + lo,
                           self.cells[lo:hi], self.left_bg, self.right_bg)


def init_profile(model, ic: InitialData, eps: float, theta0: float,
                 tv_budget: float = DEFAULT_TV_BUDGET) -> GridProfile:
    a, b = ic.support
    j_lo = int(np.floor(a / eps)) - 1
    j_hi = int(np.ceil(b / eps)) + 1
    cells = np.array([ic((j + theta0) * eps) for j in range(j_lo, j_hi + 1)])
    prof = GridProfile(eps=eps, time_index=0, j_lo=j_lo, cells=cells,
                       left_bg=ic.left, right_bg=ic.right).trimmed()
    tv = prof.total_variation()
    if tv > tv_budget:
        raise TVBudgetExceeded(f"TV(initial data) = {tv:.4g} > budget {tv_budget:.4g}")
    return prof


# -- stepping ----------------------------------------------------------------

def interface_fans(model, profile: GridProfile, grid_n=None):
    """Riemann solutions at every interface with distinct neighbor cells."""
    fans = {}
    for j in range(profile.j_lo, profile.j_hi + 2):
        uL, uR = profile.state(j - 1), profile.state(j)
        if np.max(np.abs(uL - uR)) <= STATE_SNAP:
            continue
        fans[j] = solve_riemann(model, uL, uR, grid_n=grid_n)
    return fans


def _check_cfl(model, fans):
    lo, hi = model.raw_speed(0.0), model.raw_speed(1.0)
    for j, sol in fans.items():
        for fan in sol.fans:
            if fan.min_speed <= lo or fan.max_speed >= hi:
                raise CFLViolation(
                    f"fan speed at interface {j} escapes the unit interval "
                    f"after normalization")


# -- clipping fans at the sampling speed --------------------------------------

@dataclass(frozen=True)
class WavePortion:
    """Portion of one family fan between arc positions a and b."""
    family: int
    fan: object                  # WaveFan
    a: float
    b: float
    interface: int

    @property
    def curve(self):
        return self.fan.curve

    @property
    def size(self):
        return self.curve.direction * (self.b - self.a)

    def split_r_s(self):
        """Signed rarefaction/shock component sizes inside [a, b]."""
        sgn = self.curve.direction
        r = s = 0.0
        for comp in self.fan.components:
            lo = self.curve.eta[comp.i_lo]
            hi = self.curve.eta[comp.i_hi]
            ov = max(0.0, min(hi, self.b) - max(lo, self.a))
            if ov <= 0:
                continue
            if comp.kind is ComponentKind.RAREFACTION:
                r += sgn * ov
            else:
                s += sgn * ov
        return r, s

    def int_sigma(self):
        return self.curve.integral_sigma(self.a, self.b)


def clip_node(fan, xi_raw):
    """Node index of the sampling cut: cells with raw speed <= xi stay slow.

    This is the same comparison evaluate_solution makes, so the state the
    restart samples is exactly the curve state at the returned node."""
    return int(np.searchsorted(fan.curve.sigma_cells, xi_raw, side="right"))


@dataclass(frozen=True)
class LedgerEntry:
    """Waves meeting at one interface across a restart.

    At time (i+1) eps, interface j receives the fast portions of the fans
    from interface j-1 and the slow portions of the fans from interface j;
    they form two adjacent Riemann problems around middle_state.
    """
    step: int                    # time index of the outgoing profile
    interface: int
    theta: float
    left_parts: tuple            # WavePortion from interface j-1 (fast side)
    right_parts: tuple           # WavePortion from interface j (slow side)
    left_state: np.ndarray
    middle_state: np.ndarray
    right_state: np.ndarray
    outgoing: RiemannSolution


def _sliced_solution(model, parts, u_left, u_right):
    """Transport: rebuild the interface solution from parent-curve slices."""
    fans = []
    for fan, i0, i1 in sorted(parts, key=lambda p: p[0].family):
        fans.append(wave_fan_from_curve(slice_curve(fan.curve, i0, i1)))
    sol = solution_from_fans(model, fans, u_left)
    if sol is None or np.max(np.abs(sol.omegas[-1] - u_right)) > STATE_SNAP:
        return None
    return sol


def step_with_fans(model, profile: GridProfile, theta: float, fans,
                   grid_n=None, record_ledger=False, step_idx=0):
    """One restart: returns (new profile, its interface fans, ledger entries).

    Interfaces fed by a single incoming side reuse the parent fan as an exact
    slice; interfaces where two sides meet are fresh Riemann solves."""
    _check_cfl(model, fans)
    xi_raw = float(model.raw_speed(theta))
    j_lo, j_hi = profile.j_lo - 1, profile.j_hi + 1
    cells = np.empty((j_hi - j_lo + 1, profile.n_components))
    for j in range(j_lo, j_hi + 1):
        sol = fans.get(j)
        cells[j - j_lo] = (profile.state(j) if sol is None
                           else evaluate_solution(sol, xi_raw))
    new_prof = GridProfile(eps=profile.eps, time_index=profile.time_index + 1,
                           j_lo=j_lo, cells=cells, left_bg=profile.left_bg,
                           right_bg=profile.right_bg).trimmed()

    slow_parts, fast_parts = {}, {}      # new interface -> [(fan, i0, i1)]
    for j, sol in fans.items():
        for fan in sol.fans:
            m = clip_node(fan, xi_raw)
            last = len(fan.curve.eta) - 1
            if m > 0:
                slow_parts.setdefault(j, []).append((fan, 0, m))
            if m < last:
                fast_parts.setdefault(j + 1, []).append((fan, m, last))

    new_fans = {}
    entries = []
    for j in range(new_prof.j_lo, new_prof.j_hi + 2):
        uL, uR = new_prof.state(j - 1), new_prof.state(j)
        left = fast_parts.get(j, ())
        right = slow_parts.get(j, ())
        if np.max(np.abs(uL - uR)) <= STATE_SNAP:
            continue
        sol = None
        if left and not right:
            sol = _sliced_solution(model, left, uL, uR)
        elif right and not left:
            sol = _sliced_solution(model, right, uL, uR)
        if sol is None:
            sol = solve_riemann(model, uL, uR, grid_n=grid_n)
        new_fans[j] = sol
        if record_ledger and left and right:
            entries.append(LedgerEntry(
                step=step_idx, interface=j, theta=theta,
                left_parts=tuple(_portion(p, j - 1) for p in left),
                right_parts=tuple(_portion(p, j) for p in right),
                left_state=uL, middle_state=profile.state(j - 1),
                right_state=uR, outgoing=sol))
    return new_prof, new_fans, entries


def _portion(part, interface):
    fan, i0, i1 = part
    eta = fan.curve.eta
    return WavePortion(fan.family, fan, float(eta[i0]), float(eta[i1]), interface)


def step(model, profile: GridProfile, theta: float, fans=None,
         grid_n=None) -> GridProfile:
    """One random-choice step: exact strip evolution + restart sampling."""
    if fans is None:
        fans = interface_fans(model, profile, grid_n=grid_n)
    new_prof, _, _ = step_with_fans(model, profile, theta, fans, grid_n=grid_n)
    return new_prof


# -- trajectories ------------------------------------------------------------

@dataclass
class Trajectory:
    model: object
    eps: float
    thetas: list
    profiles: list               # GridProfile per recorded time index
    fans_steps: list             # dict j -> RiemannSolution per time index
    snapshots: list              # FunctionalSnapshot per time index (or empty)
    ledger: list                 # LedgerEntry, all steps
    actual_T: float
    constants: object = None

    @property
    def steps(self):
        return len(self.thetas)

    def profile(self, i):
        return self.profiles[i]

    def fans(self, i):
        return self.fans_steps[i]


def evolve(model, ic: InitialData, eps: float, T: float, seq,
           constants=None, snapshots="none", record_fans=False,
           record_ledger=False, grid_n=None,
           tv_budget: float = DEFAULT_TV_BUDGET) -> Trajectory:
    """Run ceil(T/eps) random-choice steps (exactly T/eps when it divides).

    snapshots: "none" | "ends" | "all" -- functional snapshots need
    `constants`; fans and the interaction ledger are recorded on request.
    """
    from . import functionals as F

    ratio = T / eps
    n_steps = int(round(ratio)) if abs(ratio - round(ratio)) < 1e-9 else int(np.ceil(ratio))
    prof = init_profile(model, ic, eps, seq.theta(0), tv_budget=tv_budget)
    thetas = []
    profiles = [prof]
    fans_list = []
    snaps = []
    ledger = []

    fans = interface_fans(model, prof, grid_n=grid_n)
    if record_fans:
        fans_list.append(fans)
    want_all = snapshots == "all"
    want_ends = snapshots in ("ends", "all")
    if want_ends and constants is not None:
        snaps.append(F.snapshot(model, fans, constants))

    for i in range(1, n_steps + 1):
        theta = seq.theta(i)
        thetas.append(theta)
        prof, fans, entries = step_with_fans(model, prof, theta, fans,
                                             grid_n=grid_n,
                                             record_ledger=record_ledger,
                                             step_idx=i)
        ledger.extend(entries)
        profiles.append(prof)
        if record_fans:
            fans_list.append(fans)
        if constants is not None and (want_all or (want_ends and i == n_steps)):
            snaps.append(F.snapshot(model, fans, constants))

    return Trajectory(model=model, eps=eps, thetas=thetas, profiles=profiles,
                      fans_steps=fans_list, snapshots=snaps, ledger=ledger,
                      actual_T=n_steps * eps, constants=constants)


# -- L1 distance -------------------------------------------------------------

def _breakpoints(profile, window):
    x_lo, x_hi = window
    xs = [x_lo]
    j0 = int(np.floor(x_lo / profile.eps))
    j1 = int(np.ceil(x_hi / profile.eps))
    for j in range(j0 + 1, j1):
        x = j * profile.eps
        if x_lo < x < x_hi:
            xs.append(x)
    xs.append(x_hi)
    return np.array(xs)


def default_window(a: GridProfile, b=None, margin=2):
    lo = (a.j_lo - margin) * a.eps
    hi = (a.j_hi + 1 + margin) * a.eps
    if isinstance(b, GridProfile):
        lo = min(lo, (b.j_lo - margin) * b.eps)
        hi = max(hi, (b.j_hi + 1 + margin) * b.eps)
    return lo, hi


def l1_distance(a: GridProfile, b, window=None, subsamples=16) -> float:
    """L1 distance between a profile and a profile or exact-solution callable."""
    if window is None:
        window = default_window(a, b)
    x_lo, x_hi = window
    if x_lo > a.j_lo * a.eps or x_hi < (a.j_hi + 1) * a.eps:
        raise WindowTooSmall(
            f"window {window} does not cover the active cells of the profile")
    if isinstance(b, GridProfile):
        if x_lo > b.j_lo * b.eps or x_hi < (b.j_hi + 1) * b.eps:
            raise WindowTooSmall(
                f"window {window} does not cover the active cells of the comparand")
        xs = np.unique(np.concatenate([_breakpoints(a, window),
                                       _breakpoints(b, window)]))
        total = 0.0
        for x0, x1 in zip(xs[:-1], xs[1:]):
            mid = 0.5 * (x0 + x1)
            ja, jb = int(np.floor(mid / a.eps)), int(np.floor(mid / b.eps))
            total += float(np.sum(np.abs(a.state(ja) - b.state(jb)))) * (x1 - x0)
        return total
    total = 0.0
    xs = _breakpoints(a, window)
    for x0, x1 in zip(xs[:-1], xs[1:]):
        j = int(np.floor(0.5 * (x0 + x1) / a.eps))
        ua = a.state(j)
        sub = np.linspace(x0, x1, subsamples + 1)
        mids = 0.5 * (sub[:-1] + sub[1:])
        for x in mids:
            total += float(np.sum(np.abs(ua - b(x)))) * (x1 - x0) / subsamples
    return total


def conservation_drift(model, trajectory: Trajectory) -> float:
    """|int u(T) - int u(0) + T (F(right bg) - F(left bg))|, window-truncated.

    Restart sampling is not conservative step by step; the drift reported
    here shrinks with the discrepancy of the sampling sequence.
    """
    first, last = trajectory.profiles[0], trajectory.profiles[-1]
    lo, hi = default_window(first, last)
    eps = trajectory.eps

    def integral(p):
        j0, j1 = int(np.floor(lo / eps)), int(np.ceil(hi / eps))
        return sum(p.state(j) * eps for j in range(j0, j1))

    boundary = trajectory.actual_T * (model.flux(last.right_bg) -
                                      model.flux(last.left_bg))
    drift = integral(last) - integral(first) + boundary
    return float(np.sum(np.abs(drift)))
