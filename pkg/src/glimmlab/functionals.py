"""Interaction functionals of a wave inventory.

For the wave set of a profile (one record per nonzero family fan per
interface) this module computes

    V      total strength,
    Q1     quadratic potential with rarefaction self-terms (single-manifold
           systems),
    Qq     quadratic potential with the inner potential of composed waves,
    Qc     cubic potential: double integrals of speed-map differences over
           same-family same-sign pairs (ordered, self-pairs included),
    Q      Qq + c Qc,
    Ups    V + C Q           (the decreasing functional driving everything),
    Ups1   V + C1 Q1,

plus the pairwise interaction quantities: cancellation, the quadratic
quantities I1 / I, and the envelope-defect amount J between two same-family
same-sign waves.

Conventions pinned here (they matter for exact step-invariance under
sampling splits and rejoins of a fan):
  * pair sums over distinct waves run over unordered pairs with an explicit
    factor 2; the cubic potential runs over ordered pairs including the
    self-pair, so splitting a rarefaction at a sample point leaves it
    unchanged;
  * the inner potential uses all distinct component pairs of a composed
    wave, 2 sum_{c<c'} |s^c s^c'| + sum_shocks q + sum_rar |s^kappa|^2,
    which collapses to 2|s^h s^kappa| + q + |s^kappa|^2 for small waves.
"""

from dataclasses import dataclass, field

import numpy as np

from .curves import ComponentKind, solve_curve, wave_fan_from_curve
from .envelope import SampledFunction, lower_convex_envelope

D2_BAND_RTOL = 1e-10      # hysteresis band for inflection detection
RATIO_FLOOR = 1e-14


# -- constants ---------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalConstants:
    c0: float                  # cross/opposite weight in Q1
    c: float                   # cross/opposite weight in Qq and cubic weight in Q
    C: float                   # Ups  = V + C (Qq + c Qc)
    C1: float                  # Ups1 = V + C1 Q1
    delta0: float


def default_constants(v0, delta0, c0=4.0, c=4.0, scale=0.125):
    C = scale / max(v0, 1e-3)
    return FunctionalConstants(c0=c0, c=c, C=C, C1=C, delta0=delta0)


# -- wave records ------------------------------------------------------------

@dataclass(frozen=True)
class SubShock:
    size: float                # signed size of the shock component
    pieces: tuple              # ((signed size, paper_convex: bool), ...)

    @property
    def convex_total(self):
        return sum(abs(s) for s, cv in self.pieces if cv)


@dataclass(frozen=True)
class WaveRecord:
    family: int
    position: int              # interface index
    size: float                # signed
    r_size: float              # signed rarefaction total
    s_size: float              # signed shock/contact total
    comp_sizes: tuple          # (signed size, is_rarefaction) per component overlap
    shocks: tuple              # SubShock per flat component inside the portion
    sigma_values: np.ndarray   # raw speed per cell slice
    sigma_weights: np.ndarray  # arc length per cell slice
    curve: object
    a: float                   # arc range of the portion on the curve
    b: float

    @property
    def sign(self):
        return 1.0 if self.size >= 0 else -1.0

    def mean_speed(self):
        w = self.sigma_weights.sum()
        return float(self.sigma_values @ self.sigma_weights / w) if w > 0 else np.nan


def _d2_array(curve):
    H = curve.reduced
    return H[:-2] - 2.0 * H[1:-1] + H[2:]      # value at node i+1


def _shock_subdecomposition(curve, i_lo, i_hi, d2_full, band):
    """Split a flat component at interpolated inflections of the reduced flux.

    A piece is a convex component exactly when the arc-space reduced flux is
    convex there.  Under the sign mirror this is the component carrying the
    small-fraction bound, and a shock of a genuinely nonlinear region has no
    convex component at all (its intrinsic potential vanishes).
    """
    sgn = curve.direction
    eta = curve.eta
    size = sgn * (eta[i_hi] - eta[i_lo])
    nodes = np.arange(i_lo + 1, i_hi)          # interior nodes
    if len(nodes) == 0:
        return SubShock(size=size, pieces=((size, _probe_convex(curve, i_lo, i_hi)),))
    vals = d2_full[nodes - 1]
    sgns = np.where(np.abs(vals) <= band, 0, np.sign(vals)).astype(int)
    # forward-fill zeros; leading zeros take the first nonzero sign
    filled = sgns.copy()
    nz = np.nonzero(filled)[0]
    if len(nz) == 0:
        return SubShock(size=size, pieces=((size, _probe_convex(curve, i_lo, i_hi)),))
    filled[:nz[0]] = filled[nz[0]]
    for i in range(1, len(filled)):
        if filled[i] == 0:
            filled[i] = filled[i - 1]
    cuts, labels = [], [filled[0]]
    for i in range(1, len(filled)):
        if filled[i] != filled[i - 1]:
            va, vb = vals[i - 1], vals[i]
            t = va / (va - vb) if va != vb else 0.5
            cuts.append(eta[nodes[i - 1]] * (1 - t) + eta[nodes[i]] * t)
            labels.append(filled[i])
    bounds = np.concatenate([[eta[i_lo]], cuts, [eta[i_hi]]])
    pieces = []
    for m in range(len(bounds) - 1):
        psize = sgn * (bounds[m + 1] - bounds[m])
        pieces.append((float(psize), bool(labels[m] > 0)))
    return SubShock(size=size, pieces=tuple(pieces))


def _probe_convex(curve, i_lo, i_hi):
    # H''(t) = d/dt lam(u(t)) = dir * grad(lam).r, evaluated mid-component
    mid = curve.states[(i_lo + i_hi) // 2]
    try:
        sign = np.sign(curve.model.dlam(mid, curve.family))
    except Exception:
        sign = 1.0
    return bool(sign * curve.direction > 0)


def wave_record(fan, interface, a=None, b=None) -> WaveRecord:
    """Record for the portion [a, b] (arc positions) of one family fan."""
    curve = fan.curve
    sgn = curve.direction
    eta = curve.eta
    a = 0.0 if a is None else float(a)
    b = float(eta[-1]) if b is None else float(b)
    d2_full = _d2_array(curve)
    band = D2_BAND_RTOL * max(float(np.max(np.abs(d2_full))) if len(d2_full) else 0.0,
                              1e-30)
    r = s = 0.0
    comp_sizes = []
    shocks = []
    for comp in fan.components:
        lo, hi = eta[comp.i_lo], eta[comp.i_hi]
        ov_lo, ov_hi = max(lo, a), min(hi, b)
        if ov_hi - ov_lo <= 0:
            continue
        size = sgn * (ov_hi - ov_lo)
        if comp.kind is ComponentKind.RAREFACTION:
            r += size
            comp_sizes.append((size, True))
        else:
            s += size
            comp_sizes.append((size, False))
            shocks.append(_shock_subdecomposition(curve, comp.i_lo, comp.i_hi,
                                                  d2_full, band))
    # cell slice of the speed map restricted to [a, b]
    i0 = int(np.searchsorted(eta, a, side="left"))
    i0 = max(0, min(i0, len(eta) - 2))
    i1 = int(np.searchsorted(eta, b, side="left"))
    i1 = max(i0 + 1, min(i1, len(eta) - 1))
    edges = eta[i0:i1 + 1].copy()
    edges[0], edges[-1] = a, b
    weights = np.diff(edges)
    values = curve.sigma_cells[i0:i1]
    keep = weights > 0
    return WaveRecord(family=fan.family, position=interface,
                      size=sgn * (b - a), r_size=r, s_size=s,
                      comp_sizes=tuple(comp_sizes), shocks=tuple(shocks),
                      sigma_values=values[keep], sigma_weights=weights[keep],
                      curve=curve, a=a, b=b)


def wave_inventory(model, fans_dict) -> list:
    """One record per nonzero family fan per interface, position-ordered."""
    records = []
    for j in sorted(fans_dict):
        for fan in fans_dict[j].fans:
            records.append(wave_record(fan, j))
    return records


# -- scalar potentials -------------------------------------------------------

def total_strength(records) -> float:
    return float(sum(abs(r.size) for r in records))


def phi(s, delta0) -> float:
    a = abs(s)
    if a <= delta0:
        return 0.0
    if a >= 2.0 * delta0:
        return 1.0
    return (a - delta0) / delta0


def intrinsic_potential(shock: SubShock, delta0) -> float:
    if shock.convex_total == 0.0:
        return 0.0
    f = phi(shock.size, delta0)
    if f == 0.0:
        return 0.0
    sizes = [abs(s) for s, _ in shock.pieces]
    cross = sum(sizes) ** 2 - sum(x * x for x in sizes)   # 2 sum_{p<q} |s_p s_q|
    sq = sum(abs(s) ** 2 for s, cv in shock.pieces if cv)
    return f * (cross + sq)


def inner_potential(record: WaveRecord, delta0) -> float:
    """2 sum_{c<c'} |s^c s^c'| + sum_shocks q + sum_rar |s^kappa|^2."""
    sizes = [abs(s) for s, _ in record.comp_sizes]
    total = sum(sizes)
    cross = total ** 2 - sum(x * x for x in sizes)
    rar_sq = sum(s * s for s, is_r in record.comp_sizes if is_r)
    q_sum = sum(intrinsic_potential(sh, delta0) for sh in record.shocks)
    return cross + rar_sq + q_sum


def _pair_terms(records, weight):
    """2 sum_{same family, same sign} + weight * [opposite sign same family
    + approaching different family], over unordered distinct pairs."""
    same = opp = appr = 0.0
    n = len(records)
    for i in range(n):
        ri = records[i]
        for j in range(i + 1, n):
            rj = records[j]
            prod = abs(ri.size * rj.size)
            if ri.family == rj.family:
                if ri.size * rj.size > 0:
                    same += prod
                else:
                    opp += prod
            else:
                lo, hi = (ri, rj) if ri.family < rj.family else (rj, ri)
                if lo.position > hi.position:
                    appr += prod
    return 2.0 * same + weight * (opp + appr)


def q1_potential(records, c0) -> float:
    base = _pair_terms(records, c0)
    own = sum(2.0 * abs(r.r_size * r.s_size) + r.r_size ** 2 for r in records)
    return float(base + own)


def qq_potential(records, c, delta0) -> float:
    base = _pair_terms(records, c)
    own = sum(inner_potential(r, delta0) for r in records)
    return float(base + own)


def _pair_integral(rec_a, rec_b) -> float:
    diff = np.abs(rec_a.sigma_values[:, None] - rec_b.sigma_values[None, :])
    return float(rec_a.sigma_weights @ diff @ rec_b.sigma_weights)


def cubic_potential(records) -> float:
    """Ordered same-family same-sign pairs, self-pairs included."""
    total = 0.0
    n = len(records)
    for i in range(n):
        ri = records[i]
        total += _pair_integral(ri, ri)
        for j in range(i + 1, n):
            rj = records[j]
            if ri.family == rj.family and ri.size * rj.size > 0:
                total += 2.0 * _pair_integral(ri, rj)
    return total


def upsilon(V, Q1, Qq, Qc, constants: FunctionalConstants):
    Q = Qq + constants.c * Qc
    return V + constants.C * Q, V + constants.C1 * Q1


# -- pairwise interaction quantities ------------------------------------------

def cancellation(s_prime, s_second) -> float:
    if s_prime * s_second < 0:
        return float(min(abs(s_prime), abs(s_second)))
    return 0.0


def i1_quantity(left: WaveRecord, right: WaveRecord, merged_r: float) -> float:
    """(|merged_r - r'| + |s'^shock|) |s''^shock| for same-sign pairs, else 0."""
    if left.size * right.size <= 0 or left.family != right.family:
        return 0.0
    return (abs(merged_r - left.r_size) + abs(left.s_size)) * abs(right.s_size)


def i_quantity(left: WaveRecord, right: WaveRecord, merged_r: float,
               manifold_sign) -> float:
    """Branch of the quantity of interaction picked by the curvature sign of
    the crossed manifold component; no crossing falls back to the first
    branch (identical to i1)."""
    if left.size * right.size <= 0 or left.family != right.family:
        return 0.0
    if manifold_sign is None or manifold_sign < 0:
        return (abs(merged_r - left.r_size) + abs(left.s_size)) * abs(right.s_size)
    return (abs(merged_r - right.r_size) + abs(right.s_size)) * abs(left.s_size)


def crossed_manifold_sign(model, k, curve):
    """Curvature sign of the manifold component the curve crosses, else None."""
    info = model.field(k)
    if not info.manifolds:
        return None
    idx = np.linspace(0, len(curve.states) - 1, min(17, len(curve.states))).astype(int)
    for desc in info.manifolds:
        g = np.array([desc.implicit(curve.states[i]) for i in idx])
        nz = g[np.abs(g) > 0]
        if len(nz) and (nz.min() < 0 < nz.max()):
            return desc.curvature_sign
    return None


def _portion_reduced(rec: WaveRecord):
    """Arc grid and reduced flux of the portion, shifted to start at zero."""
    curve = rec.curve
    eta = curve.eta
    inner = eta[(eta > rec.a) & (eta < rec.b)]
    ts = np.concatenate([[rec.a], inner, [rec.b]])
    H = np.interp(ts, eta, curve.reduced)
    return ts - rec.a, H - H[0]


def amount_of_interaction(left: WaveRecord, right: WaveRecord) -> float:
    """Envelope-defect area when the two reduced fluxes are concatenated.

    Normalized so that for two same-sign shocks it equals
    |s' s''| |sigma' - sigma''| exactly.
    """
    if left.family != right.family or left.size * right.size <= 0:
        return 0.0
    t1, H1 = _portion_reduced(left)
    t2, H2 = _portion_reduced(right)
    a1, a2 = t1[-1], t2[-1]
    if a1 <= 0 or a2 <= 0:
        return 0.0
    tu = np.concatenate([t1, a1 + t2[1:]])
    G = np.concatenate([H1, H1[-1] + H2[1:]])
    env_u = lower_convex_envelope(SampledFunction(tu, G)).envelope
    env_1 = lower_convex_envelope(SampledFunction(t1, H1)).envelope
    env_2 = lower_convex_envelope(SampledFunction(t2, H2)).envelope
    g1 = np.abs(env_1 - env_u[:len(t1)])
    part2 = H1[-1] + env_2[1:]
    g2 = np.abs(part2 - env_u[len(t1):])
    term1 = np.trapezoid(g1, t1)
    g2_full = np.concatenate([[abs(H1[-1] + env_2[0] - env_u[len(t1) - 1])], g2])
    term2 = np.trapezoid(g2_full, np.concatenate([[a1], a1 + t2[1:]]))
    return 2.0 * float(term1 + term2)


# -- snapshots ---------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalSnapshot:
    time_index: int
    V: float
    Q1: float
    Qq: float
    Qcubic: float
    Q: float
    Upsilon: float
    Upsilon1: float
    cancellation: float = 0.0


def snapshot(model, fans_dict, constants: FunctionalConstants,
             time_index=0, cancellation_total=0.0) -> FunctionalSnapshot:
    records = wave_inventory(model, fans_dict)
    V = total_strength(records)
    Q1 = q1_potential(records, constants.c0)
    Qq = qq_potential(records, constants.c, constants.delta0)
    Qc = cubic_potential(records)
    Q = Qq + constants.c * Qc
    ups, ups1 = upsilon(V, Q1, Qq, Qc, constants)
    return FunctionalSnapshot(time_index=time_index, V=V, Q1=Q1, Qq=Qq,
                              Qcubic=Qc, Q=Q, Upsilon=ups, Upsilon1=ups1,
                              cancellation=cancellation_total)


# -- per-interaction deltas ----------------------------------------------------

@dataclass(frozen=True)
class InteractionDeltas:
    dV: float
    dQ1: float
    dQq: float
    dQcubic: float
    dQ: float
    dUpsilon: float
    dUpsilon1: float
    cancellation: float
    cross_term: float            # sum_{i>j} |s'_i s''_j|
    opposite_term: float         # same family, opposite sign products
    i1_total: float
    i_total: float               # small-wave branch quantity (|s| <= delta0/2)
    j_total: float
    checks: dict                 # name -> (lhs, rhs_bracket, implied_constant)


def _records_from_portions(portions, position):
    return [wave_record(p.fan, position, p.a, p.b) for p in portions]


def interaction_deltas(model, entry, constants: FunctionalConstants) -> InteractionDeltas:
    """Evaluate both sides of the local interaction estimates for one ledger
    entry; the implied constant of each inequality is lhs / rhs_bracket."""
    left = _records_from_portions(entry.left_parts, 0)
    right = _records_from_portions(entry.right_parts, 1)
    incoming = left + right
    outgoing = [wave_record(fan, 0) for fan in entry.outgoing.fans]

    V_in, V_out = total_strength(incoming), total_strength(outgoing)
    dV = V_out - V_in
    dQ1 = (q1_potential(outgoing, constants.c0) -
           q1_potential(incoming, constants.c0))
    dQq = (qq_potential(outgoing, constants.c, constants.delta0) -
           qq_potential(incoming, constants.c, constants.delta0))
    dQc = cubic_potential(outgoing) - cubic_potential(incoming)
    dQ = dQq + constants.c * dQc
    dUps = dV + constants.C * dQ
    dUps1 = dV + constants.C1 * dQ1

    by_family_left = {r.family: r for r in left}
    by_family_right = {r.family: r for r in right}
    cross = 0.0
    for rl in left:
        for rr in right:
            if rl.family > rr.family:
                cross += abs(rl.size * rr.size)
    canc = opp = i1_tot = i_tot = j_tot = 0.0
    for k in sorted(set(by_family_left) | set(by_family_right)):
        rl, rr = by_family_left.get(k), by_family_right.get(k)
        if rl is None or rr is None:
            continue
        canc += cancellation(rl.size, rr.size)
        if rl.size * rr.size < 0:
            opp += abs(rl.size * rr.size)
            continue
        merged_rec, merged_curve = _merged_wave(model, entry, rl, rr)
        i1_tot += i1_quantity(rl, rr, merged_rec.r_size)
        if max(abs(rl.size), abs(rr.size)) <= 0.5 * constants.delta0:
            sign = crossed_manifold_sign(model, k, merged_curve)
            i_tot += i_quantity(rl, rr, merged_rec.r_size, sign)
        j_tot += amount_of_interaction(rl, rr)

    bracket_tv1 = cross + i1_tot
    bracket_ip1 = cross + opp + i1_tot
    bracket_tv = cross + j_tot
    bracket_ip = cross + opp + i_tot + j_tot
    checks = {
        "tv1": (dV + canc, bracket_tv1,
                (dV + canc) / max(bracket_tv1, RATIO_FLOOR)),
        "ip1": (dQ1, bracket_ip1, -dQ1 / max(0.5 * bracket_ip1, RATIO_FLOOR)),
        "tv": (dV + canc, bracket_tv,
               (dV + canc) / max(bracket_tv, RATIO_FLOOR)),
        "ip": (dQ, bracket_ip, -dQ / max(0.5 * bracket_ip, RATIO_FLOOR)),
    }
    return InteractionDeltas(dV=dV, dQ1=dQ1, dQq=dQq, dQcubic=dQc, dQ=dQ,
                             dUpsilon=dUps, dUpsilon1=dUps1, cancellation=canc,
                             cross_term=cross, opposite_term=opp,
                             i1_total=i1_tot, i_total=i_tot, j_total=j_tot,
                             checks=checks)


def _merged_wave(model, entry, rl: WaveRecord, rr: WaveRecord):
    """Size-(s'+s'') wave of the pair's family, issued from the left state of
    s' transported through the slower families of the right group."""
    k = rl.family
    u_sharp = rl.curve.state_at(rl.a)
    for rj in sorted(entry.right_parts, key=lambda p: p.family):
        if rj.family < k:
            c = solve_curve(model, u_sharp, rj.family, rj.size)
            u_sharp = c.right_state()
    merged = solve_curve(model, u_sharp, k, rl.size + rr.size)
    fan = wave_fan_from_curve(merged)
    return wave_record(fan, 0), merged
