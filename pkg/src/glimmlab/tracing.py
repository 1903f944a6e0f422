"""Wave partitions and primary/secondary tracing across restart steps.

Every wave of the profile is split into subwaves whose normalized speed
range per piece is at most eps and never brackets the next sampling value
theta, so a restart moves each subwave to one of two interfaces without
splitting it.  Across an interaction the outgoing partition copies the
incoming subwave sizes in order (left group first), cutting at the outgoing
size and tagging overflow as secondary; subwaves that disappear are
canceled.  A subwave keeps the identity of its time-m ancestor, which makes
the size/speed-change and secondary-strength totals of a time interval
directly computable.
"""

from dataclasses import dataclass, field

import numpy as np

from .curves import ComponentKind
from .errors import EmptyInterval
from .functionals import RATIO_FLOOR, amount_of_interaction, wave_record

SPEED_EPS_SLACK = 1e-12


@dataclass(frozen=True)
class Subwave:
    size: float                 # signed
    a: float                    # arc interval on the carrying curve
    b: float
    lam_raw: float              # mean raw speed (envelope average)
    lam_hat: float              # normalized
    origin: tuple               # (m, j, k, h) ancestor id; None = secondary
    birth: int


@dataclass
class PartitionedWave:
    family: int
    interface: int
    fan: object
    subwaves: list

    @property
    def size(self):
        return sum(s.size for s in self.subwaves)

    @property
    def curve(self):
        return self.fan.curve


def _cell_left_of(curve, pos):
    i = int(np.searchsorted(curve.eta, pos, side="left")) - 1
    return min(max(i, 0), len(curve.sigma_cells) - 1)


def _cell_right_of(curve, pos):
    i = int(np.searchsorted(curve.eta, pos, side="right")) - 1
    return min(max(i, 0), len(curve.sigma_cells) - 1)


def _segment_bounds(curve, model, eps, theta_next, a, b):
    """Cut (a, b) at greedy eps-increments of the normalized speed and at the
    sampling-speed crossing; cuts land on grid nodes of the curve."""
    sig_hat = model.normalize_speed(curve.sigma_cells)
    eta = curve.eta
    i0 = _cell_right_of(curve, a)
    i1 = _cell_left_of(curve, b)
    cuts = []
    start_val = sig_hat[i0]
    for c in range(i0 + 1, i1 + 1):
        if sig_hat[c] - start_val > eps + SPEED_EPS_SLACK:
            cuts.append(eta[c])
            start_val = sig_hat[c]
    if theta_next is not None:
        # raw comparison, bit-identical with the restart sampling
        xi = float(model.raw_speed(theta_next))
        sig = curve.sigma_cells
        if sig[i0] <= xi < sig[i1]:
            c = i0
            while c <= i1 and sig[c] <= xi:
                c += 1
            x = eta[c]
            if a < x < b and not any(abs(x - y) < 1e-15 for y in cuts):
                cuts.append(x)
    return sorted(cuts)


def partition_bounds(fan, model, eps, theta_next, base=None):
    """Arc positions splitting [0, arc]: component edges, inherited cuts,
    eps-increment cuts and the theta cut."""
    curve = fan.curve
    arc = curve.arc
    bounds = {0.0, arc}
    for comp in fan.components:
        bounds.add(float(curve.eta[comp.i_lo]))
        bounds.add(float(curve.eta[comp.i_hi]))
    if base:
        bounds.update(float(x) for x in base if 0.0 < x < arc)
    bounds = sorted(bounds)
    out = [bounds[0]]
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a <= 0:
            continue
        out.extend(_segment_bounds(curve, model, eps, theta_next, a, b))
        out.append(b)
    return np.array(sorted(set(out)))


def _make_subwaves(fan, model, bounds, origins, birth):
    curve = fan.curve
    sgn = curve.direction
    subs = []
    for h in range(len(bounds) - 1):
        a, b = float(bounds[h]), float(bounds[h + 1])
        if b - a <= 0:
            continue
        lam = curve.mean_sigma(a, b)
        subs.append(Subwave(size=sgn * (b - a), a=a, b=b, lam_raw=lam,
                            lam_hat=float(model.normalize_speed(lam)),
                            origin=origins[h] if origins else None, birth=birth))
    return subs


def partition_wave(fan, model, eps, theta_next, origin_time=None,
                   interface=None, birth=0) -> PartitionedWave:
    """Fresh partition of one family fan (Def.-style: speed increment <= eps
    per subwave, theta never interior to a subwave's speed interval)."""
    bounds = partition_bounds(fan, model, eps, theta_next)
    origins = None
    if origin_time is not None:
        origins = [(origin_time, interface, fan.family, h)
                   for h in range(len(bounds) - 1)]
    subs = _make_subwaves(fan, model, bounds, origins, birth)
    return PartitionedWave(family=fan.family, interface=interface, fan=fan,
                           subwaves=subs)


def split_by_theta(pw: PartitionedWave, model, theta):
    """(slow, fast) subwave lists; the partition guarantees a clean split."""
    xi = float(model.raw_speed(theta))
    slow, fast = [], []
    for sub in pw.subwaves:
        i = _cell_left_of(pw.curve, sub.b)
        (slow if pw.curve.sigma_cells[i] <= xi else fast).append(sub)
    return slow, fast


def merge_partitions_at_interaction(incoming, out_fan, model, eps, theta_next,
                                    birth) -> PartitionedWave:
    """Partition of the outgoing wave inheriting incoming subwave identities.

    incoming: subwaves of the same family in spatial order (left group then
    right group).  Sizes are copied in order while they fit the outgoing
    size; a subwave straddling the cut is split and its tail canceled;
    overflow of the outgoing size becomes secondary subwaves.
    """
    curve = out_fan.curve
    s_out = curve.size
    sgn_out = curve.direction
    matching = [s for s in incoming if s.size * s_out > 0]
    target = abs(s_out)
    cum = 0.0
    inherited_cuts = []
    origins = []
    for sub in matching:
        if cum >= target - 1e-15:
            break
        take = min(abs(sub.size), target - cum)
        cum += take
        inherited_cuts.append(cum)
        origins.append(sub.origin)
    bounds = partition_bounds(out_fan, model, eps, theta_next,
                              base=inherited_cuts)
    # assign each final piece the origin of the inherited slot it fell into
    slot_edges = np.concatenate([[0.0], inherited_cuts])
    piece_origins = []
    for h in range(len(bounds) - 1):
        mid = 0.5 * (bounds[h] + bounds[h + 1])
        idx = int(np.searchsorted(slot_edges, mid, side="right")) - 1
        if 0 <= idx < len(origins) and mid <= slot_edges[-1]:
            piece_origins.append(origins[idx])
        else:
            piece_origins.append(None)        # overflow: secondary
    subs = _make_subwaves(out_fan, model, bounds, piece_origins, birth)
    return PartitionedWave(family=out_fan.family, interface=None, fan=out_fan,
                           subwaves=subs)


# -- interval tracing ---------------------------------------------------------

@dataclass(frozen=True)
class TracingReport:
    m: int
    n: int
    secondary_strength: tuple     # per time index in [m, n]
    size_change_total: float      # sum over matched ancestors of max size drift
    speed_change_total: float     # sum of |size| * max speed drift (normalized)
    d_upsilon: float              # Upsilon(n eps) - Upsilon(m eps)
    matched: int
    canceled: int
    correspondence: dict          # origin -> {i: [(interface, slot), ...]}

    @property
    def ratios(self):
        den = max(abs(self.d_upsilon), RATIO_FLOOR)
        return {
            "secondary": max(self.secondary_strength) / den,
            "size_change": self.size_change_total / den,
            "speed_change": self.speed_change_total / den,
        }


def _partition_profile(trajectory, i, origin_time=None):
    """Fresh partitions of all waves at time index i."""
    model = trajectory.model
    eps = trajectory.eps
    theta_next = trajectory.thetas[i] if i < len(trajectory.thetas) else None
    parts = {}
    for j, sol in trajectory.fans(i).items():
        fam = {}
        for fan in sol.fans:
            fam[fan.family] = partition_wave(
                fan, model, eps, theta_next, origin_time=origin_time,
                interface=j, birth=i)
        parts[j] = fam
    return parts


def trace_interval(trajectory, m, n) -> TracingReport:
    """Run the inductive partition bookkeeping on [m eps, n eps]."""
    if not (0 <= m < n < len(trajectory.profiles)):
        raise EmptyInterval(f"need 0 <= m < n <= steps, got ({m}, {n})")
    if not trajectory.fans_steps:
        raise EmptyInterval("trajectory was evolved without record_fans")
    model = trajectory.model
    eps = trajectory.eps

    parts = _partition_profile(trajectory, m, origin_time=m)
    init_info = {}
    for j, fam in parts.items():
        for k, pw in fam.items():
            for h, sub in enumerate(pw.subwaves):
                init_info[sub.origin] = (sub.size, sub.lam_hat)

    history = [parts]
    for i in range(m, n):
        theta = trajectory.thetas[i]
        theta_after = trajectory.thetas[i + 1] if i + 1 < len(trajectory.thetas) else None
        slow_parts, fast_parts = {}, {}
        for j, fam in parts.items():
            for k, pw in fam.items():
                slow, fast = split_by_theta(pw, model, theta)
                if slow:
                    slow_parts.setdefault(j, {})[k] = slow
                if fast:
                    fast_parts.setdefault(j, {})[k] = fast
        new_parts = {}
        for j_new, sol in trajectory.fans(i + 1).items():
            left = fast_parts.get(j_new - 1, {})
            right = slow_parts.get(j_new, {})
            fam_out = {}
            for fan in sol.fans:
                k = fan.family
                incoming = list(left.get(k, [])) + list(right.get(k, []))
                if incoming:
                    fam_out[k] = merge_partitions_at_interaction(
                        incoming, fan, model, eps, theta_after, birth=i + 1)
                else:
                    fam_out[k] = partition_wave(fan, model, eps, theta_after,
                                                origin_time=None, interface=j_new,
                                                birth=i + 1)
                fam_out[k].interface = j_new
            new_parts[j_new] = fam_out
        parts = new_parts
        history.append(parts)

    # aggregate descendants per ancestor and time
    times = list(range(m, n + 1))
    per_time = []
    for idx, snap_parts in enumerate(history):
        agg = {}
        sec = 0.0
        correspond = {}
        for j, fam in snap_parts.items():
            for k, pw in fam.items():
                for slot, sub in enumerate(pw.subwaves):
                    if sub.origin is None:
                        sec += abs(sub.size)
                        continue
                    a = agg.setdefault(sub.origin, [0.0, 0.0])
                    a[0] += abs(sub.size)
                    a[1] += abs(sub.size) * sub.lam_hat
                    correspond.setdefault(sub.origin, []).append((j, slot))
        per_time.append((agg, sec, correspond))

    alive_throughout = set(init_info)
    for agg, _, _ in per_time:
        alive_throughout &= {o for o, v in agg.items() if v[0] > 1e-15}
    canceled = set(init_info) - alive_throughout

    secondary_strength = []
    for agg, sec, _ in per_time:
        dead_now = sum(v[0] for o, v in agg.items() if o in canceled)
        secondary_strength.append(sec + dead_now)

    size_change = 0.0
    speed_change = 0.0
    for origin in alive_throughout:
        s0, lam0 = init_info[origin]
        max_ds = 0.0
        max_dl = 0.0
        for agg, _, _ in per_time:
            s_i, wlam = agg[origin]
            max_ds = max(max_ds, abs(abs(s0) - s_i))
            max_dl = max(max_dl, abs(lam0 - wlam / s_i))
        size_change += max_ds
        speed_change += abs(s0) * max_dl

    correspondence = {}
    for idx, (agg, _, corr) in enumerate(per_time):
        for origin, slots in corr.items():
            correspondence.setdefault(origin, {})[times[idx]] = slots

    if trajectory.snapshots and len(trajectory.snapshots) > n:
        d_ups = (trajectory.snapshots[n].Upsilon -
                 trajectory.snapshots[m].Upsilon)
    else:
        d_ups = np.nan
    return TracingReport(m=m, n=n, secondary_strength=tuple(secondary_strength),
                         size_change_total=size_change,
                         speed_change_total=speed_change, d_upsilon=float(d_ups),
                         matched=len(alive_throughout), canceled=len(canceled),
                         correspondence=correspondence)


# -- speed-average diagnostic --------------------------------------------------

def speed_average_check(left_curve, right_curve, out_speed_raw):
    """Residual of the merged-shock speed identity.

    For a same-family same-sign merge into a shock of raw speed lambda,
    lambda (s' + s'') should equal the signed integrals of the incoming
    speed maps up to the amount of interaction."""
    s1, s2 = left_curve.size, right_curve.size
    int1 = left_curve.direction * left_curve.integral_sigma()
    int2 = right_curve.direction * right_curve.integral_sigma()
    residual = abs(out_speed_raw * (s1 + s2) - int1 - int2)
    fan_l = _as_record(left_curve)
    fan_r = _as_record(right_curve)
    j_val = amount_of_interaction(fan_l, fan_r)
    ratio = residual / j_val if j_val > 0 else (0.0 if residual <= 1e-12 else np.inf)
    return residual, j_val, ratio


def _as_record(curve):
    from .curves import wave_fan_from_curve
    return wave_record(wave_fan_from_curve(curve), 0)
