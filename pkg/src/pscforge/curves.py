"""Admissible bending curves in the (t, r) quadrant.

The neck-deformation machinery is driven by a plane curve gamma(s) =
(gamma_t(s), gamma_r(s)) living in the strip [0, t_bar] x [0, r_bar].  An
admissible curve starts on the t-axis and meets it at angle pi/2, is
regular, ends as a vertical segment, and in between decomposes over a
ladder of axis-aligned rectangles on which it is alternately a concave
graph over the r-axis, a straight run, and a convex graph over the
r-axis.  Composing a warping profile omega with the height component
gamma_r turns the induced hypersurface metric into the warped product
ds^2 + omega(gamma_r(s))^2 ds_q^2, so every operation here ultimately
feeds compose_warp.

Curves are stored as a pair of exact-jet component functions sharing one
parameter interval.  The bending-curve constructor keeps the parameter at
unit speed by assembling pieces whose speed is identically one:

  * a cap-and-neck piece swept by a disk profile eta, with abscissa
    alpha(s) = int_s^b sqrt(1 - eta'(u)^2) du, so (alpha, eta) leaves the
    t-axis vertically and exits running horizontally at height delta;
  * a turn whose direction angle follows theta(s) = (pi/2) S(s/Lambda)
    for a flat smooth step S, so velocity (-cos theta, sin theta) matches
    a horizontal line to all orders at the inlet and a vertical line at
    the outlet;
  * the vertical tail.

The turn rises and advances by the same amount kappa * Lambda, with
kappa = int_0^1 sin((pi/2) S(u)) du, because S(1 - u) = 1 - S(u) swaps
the sine and cosine integrands.  Choosing Lambda = (r0 - delta) / kappa
therefore lands the turn exactly at (0, r0): vertical above r0.

Note: for cap-led curves the t-component has a square-root zero in its
abscissa integrand at s = 0, so jets of gamma_t of order >= 2 are
singular exactly at the axis; validation samples the open interior, and
compositions only ever use gamma_r, whose jets are regular everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Tuple

import numpy as np

from .errors import ConstructionError, InvalidMetricError, RangeError
from .quadrature import integrate_from
from .warp import (
    GRID_EPS,
    K_MAX,
    QUAD_TOL,
    Affine,
    Antider,
    Compose,
    Const,
    Deriv,
    InverseOf,
    MembershipReport,
    Prod,
    SinCap,
    SmoothStep,
    Sqrt,
    Sum,
    WarpFunction,
    glue,
)
from .torpedo import alpha_ordinate, perfect_torpedo, DEFAULT_WINDOW

__all__ = [
    "AdmissibleCurve",
    "vertical_curve",
    "graph_curve",
    "gl_curve",
    "validate_admissible",
    "arc_length_param",
    "s_gamma",
    "homotopy_to_vertical",
    "compose_warp",
    "curve_rows",
    "curve_to_obj",
    "curve_from_obj",
]

# Rectangle ladder: index i spans [t_i, t_{i+1}] x [r_{i+1}, r_i]; the curve
# climbs from the t-axis (rectangle 4) to the vertical tail (above
# rectangle 0).  Graph rectangles also require the height to be monotone.
_SEGMENT_KINDS = ("graph_convex", "straight", "graph_convex", "straight", "graph_concave")

_AXIS_TOL = 1e-9
_ANGLE_TOL = 1e-6
_SPEED_FLOOR = 1e-8
_TURN_TOL = 1e-8


def _speed_rep(gamma_t, gamma_r):
    dt = Deriv(gamma_t.rep)
    dr = Deriv(gamma_r.rep)
    return Sqrt(Sum((Prod((dt, dt)), Prod((dr, dr)))))


@dataclass(frozen=True)
class AdmissibleCurve:
    """A candidate bending curve, stored as exact-jet components.

    gamma_t and gamma_r share the parameter interval [0, param_end]; the
    supplied parameterisation need not be unit speed (validation measures
    the regularity of whatever is given), but every constructor in this
    module produces unit-speed components and records that in
    meta['unit_speed'].

    breakpoints lists six corners (t_i, r_i), i = 0..5, with
    t_0 <= ... <= t_5 = t_bar and 0 = r_5 < r_4 <= r_3 < r_2 < r_1 < r_0
    < r_bar.  Rectangle i spans [t_i, t_{i+1}] x [r_{i+1}, r_i] and
    segments[i] names the profile the curve must follow there; zero-area
    rectangles are legal and simply attract no interior samples.
    """

    gamma_t: WarpFunction
    gamma_r: WarpFunction
    breakpoints: Tuple
    r_bar: float
    segments: Tuple = _SEGMENT_KINDS
    arc_length: float = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.gamma_t.domain_end - self.gamma_r.domain_end) > 1e-12:
            raise ConstructionError("curve components must share a parameter interval")
        if len(self.breakpoints) != 6 or len(self.segments) != 5:
            raise ConstructionError("a bending curve has 6 breakpoints and 5 rectangles")
        if self.arc_length is None:
            speed = _speed_rep(self.gamma_t, self.gamma_r)
            total = float(
                integrate_from(
                    lambda x: speed.taylor(np.asarray(x, dtype=float), 0)[0],
                    0.0,
                    np.array([self.param_end]),
                    tol=QUAD_TOL,
                )[0]
            )
            object.__setattr__(self, "arc_length", total)

    @property
    def param_end(self):
        return self.gamma_r.domain_end

    @property
    def t_bar(self):
        return float(self.gamma_t.eval(0.0, 0))

    def point(self, s):
        return self.gamma_t.eval(s, 0), self.gamma_r.eval(s, 0)

    def velocity(self, s):
        return self.gamma_t.eval(s, 1), self.gamma_r.eval(s, 1)


def _degenerate_breakpoints(t_const, r_bar):
    r = r_bar
    return (
        (t_const, 0.8 * r),
        (t_const, 0.6 * r),
        (t_const, 0.4 * r),
        (t_const, 0.2 * r),
        (t_const, 0.2 * r),
        (t_const, 0.0),
    )


def vertical_curve(r_bar):
    """The vertical segment rising from (0, 0): the homotopy's terminal curve."""
    r_bar = float(r_bar)
    if r_bar <= 0.0:
        raise ConstructionError("ambient height r_bar must be positive")
    gt = WarpFunction(r_bar, Const(0.0))
    gr = WarpFunction(r_bar, Affine(0.0, 1.0))
    return AdmissibleCurve(
        gt,
        gr,
        _degenerate_breakpoints(0.0, r_bar),
        r_bar,
        arc_length=r_bar,
        meta={"kind": "vertical", "unit_speed": True, "vertical_from": 0.0},
    )


_KAPPA_CACHE = {}


def _turn_mean_sine():
    """kappa = int_0^1 sin((pi/2) S(u)) du for the flat-ended unit turn."""
    if "kappa" not in _KAPPA_CACHE:
        theta = Prod((Const(math.pi / 2.0), SmoothStep(0.0, 1.0)))
        integrand = Compose(SinCap(1.0), theta)
        val = float(
            integrate_from(
                lambda x: integrand.taylor(np.asarray(x, dtype=float), 0)[0],
                0.0,
                np.array([1.0]),
                tol=1e-13,
            )[0]
        )
        _KAPPA_CACHE["kappa"] = val
    return _KAPPA_CACHE["kappa"]


def gl_curve(delta, r0, r_bar, bend_profile=None):
    """Bending curve: cap-and-neck base, one smooth turn, vertical tail.

    delta is the radius of the initial cap (the curve leaves the t-axis
    sweeping a delta-cap, then runs horizontally at height delta), r0 the
    height of the top of the turn (the curve is vertical above r0), and
    r_bar the ambient height reached by the tail.  bend_profile may carry
    'neck_run' (extra horizontal run before the turn, default delta/2)
    and 'window' (cap join half-width fraction, default 0.025).

    The turn needs headroom delta < r0 < r_bar; delta == 0 degenerates to
    the vertical line from (0, 0), which is itself admissible.
    """
    delta = float(delta)
    r0 = float(r0)
    r_bar = float(r_bar)
    if r_bar <= 0.0 or not (0.0 < r0 < r_bar):
        raise ConstructionError("need 0 < r0 < r_bar")
    if delta < 0.0:
        raise ConstructionError("cap radius delta must be nonnegative")
    if delta == 0.0:
        return vertical_curve(r_bar)
    if delta >= r0:
        raise ConstructionError(
            f"turn needs headroom: delta = {delta} must stay below the turn top r0 = {r0}"
        )
    profile = dict(bend_profile or {})
    neck_run = float(profile.pop("neck_run", 0.5 * delta))
    window = float(profile.pop("window", DEFAULT_WINDOW))
    if profile:
        raise ConstructionError(f"unknown bend_profile keys: {sorted(profile)}")
    if neck_run <= 0.0:
        raise ConstructionError("neck_run must be positive")

    L = delta * math.pi / 2.0
    b_t = L * (1.0 + 2.0 * window) + neck_run
    eta = perfect_torpedo(delta, b_t, window=window)
    alpha = alpha_ordinate(eta)
    alpha0 = float(alpha.eval(0.0, 0))

    rho = r0 - delta
    kappa = _turn_mean_sine()
    lam = rho / kappa
    s_v = b_t + lam
    l_gamma = s_v + (r_bar - r0)

    # Turn reps: theta(s) = (pi/2) S((s - b_t)/lam), velocity
    # (-cos theta, sin theta).  Before b_t the step (hence theta) is
    # identically zero, so turn and cap-and-neck reps agree exactly on the
    # neck's flat stretch; the glue window sits inside that overlap and
    # blends two equal functions.
    u = Affine(-b_t / lam, 1.0 / lam)
    theta = Prod((Const(math.pi / 2.0), Compose(SmoothStep(0.0, 1.0), u)))
    sin_theta = Compose(SinCap(1.0), theta)
    cos_theta = Compose(SinCap(1.0), Sum((theta, Const(math.pi / 2.0))))
    turn_r = Sum((Const(delta), Antider(sin_theta, b_t, 0.0)))
    turn_t = Sum((Const(rho), Antider(cos_theta, b_t, 0.0)), (1.0, -1.0))
    base_r = eta.rep
    base_t = Sum((Const(rho), alpha.rep))

    s_flat = L * (1.0 + window)  # neck is exactly flat from here to b_t
    join_at = 0.5 * (s_flat + b_t)
    join_w = 0.9 * (b_t - s_flat)
    gr = WarpFunction(l_gamma, glue(base_r, turn_r, join_at, join_w))
    gt = WarpFunction(l_gamma, glue(base_t, turn_t, join_at, join_w))

    t4 = rho + float(alpha.eval(s_flat, 0))
    breakpoints = (
        (0.0, r0 + 2.0 * (r_bar - r0) / 3.0),
        (0.0, r0 + (r_bar - r0) / 3.0),
        (0.0, r0),
        (rho, delta),
        (t4, delta),
        (rho + alpha0, 0.0),
    )
    meta = {
        "kind": "gl",
        "unit_speed": True,
        "delta": delta,
        "first_bend": r0,
        "neck_run": neck_run,
        "window": window,
        "vertical_from": r0,
    }
    return AdmissibleCurve(gt, gr, breakpoints, r_bar, arc_length=l_gamma, meta=meta)


def graph_curve(profile):
    """Curve t = T(r) over the full height range, arc-length parameterised.

    T lives on [0, r_bar]; it must be level at r = 0 (T'(0) = 0, so the
    curve meets the t-axis at angle pi/2) and identically zero near r_bar
    (the vertical tail sits on the r-axis).  The inverse of the length
    table s(r) = int_0^r sqrt(1 + T'(u)^2) du is embedded in the component
    rep trees, keeping jets of the parameterised curve exact.

    Breakpoints are detected from T: the concave/convex split at the
    inflection of T and the tail onset where T vanishes for good.
    """
    r_bar = float(profile.domain_end)
    grid = np.linspace(0.0, r_bar, 2048)
    Tc = profile.coeffs(grid, 2)
    vals, d2 = Tc[0], 2.0 * Tc[2]
    if float(np.max(np.abs(vals))) <= 1e-12:
        return vertical_curve(r_bar)

    d = Deriv(profile.rep)
    speed = Sqrt(Sum((Const(1.0), Prod((d, d)))))
    s_node = Antider(speed, 0.0, 0.0)
    l_gamma = float(
        integrate_from(
            lambda x: speed.taylor(np.asarray(x, dtype=float), 0)[0],
            0.0,
            np.array([r_bar]),
            tol=QUAD_TOL,
        )[0]
    )
    inv = InverseOf(s_node, 0.0, r_bar)
    gr = WarpFunction(l_gamma, inv)
    gt = WarpFunction(l_gamma, Compose(profile.rep, inv))

    # Tail onset: past the last height where the curve still turns.  The
    # value alone is not enough (a mollified profile keeps measurable
    # second derivative where its value is already below 1e-10), so the
    # first two derivatives gate the detection as well.
    d1 = Tc[1]
    turning = (np.abs(vals) > 1e-10) | (np.abs(d1) > 1e-9) | (np.abs(d2) > 1e-9)
    nz = np.nonzero(turning)[0]
    r_vert = float(grid[min(int(nz[-1]) + 1, grid.size - 1)]) if nz.size else 0.0
    # Concave/convex split: the zero of T'', refined by bisection so the
    # breakpoint tolerance band around it is the only place where samples
    # of mixed sign can sit (they are then boundary samples of both
    # neighbouring rectangles).
    convex = d2 > 1e-10
    if convex.any():
        first_convex = int(np.argmax(convex))
        lo = grid[max(first_convex - 1, 0)]
        hi = grid[first_convex]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if 2.0 * float(profile.coeffs(np.array([mid]), 2)[2][0]) > 0.0:
                hi = mid
            else:
                lo = mid
        r_infl = 0.5 * (lo + hi)
    else:
        r_infl = 0.5 * r_vert if r_vert > 0 else 0.5 * r_bar
    t_bar = float(vals[0])
    t_infl = float(profile.eval(r_infl, 0))
    t_vert = float(profile.eval(min(r_vert, r_bar), 0))
    breakpoints = (
        (0.0, r_vert + 2.0 * (r_bar - r_vert) / 3.0),
        (0.0, r_vert + (r_bar - r_vert) / 3.0),
        (t_vert, r_vert),
        (t_infl, r_infl),
        (t_infl, r_infl),
        (t_bar, 0.0),
    )
    meta = {
        "kind": "graph",
        "unit_speed": True,
        "profile": profile,
        "vertical_from": r_vert,
    }
    return AdmissibleCurve(gt, gr, breakpoints, r_bar, arc_length=l_gamma, meta=meta)


def validate_admissible(curve, npoints=2048):
    """Per-condition report for the bending-curve constraints.

    Checks: the curve starts on the t-axis and meets it at angle pi/2
    (|dgamma_t/ds| / |gamma'| <= 1e-6 at s = 0); it is regular
    (min |gamma'| >= 1e-8); its image stays inside [0, t_bar] x [0, r_bar];
    the breakpoints are ordered (t nondecreasing, r strictly decreasing
    apart from r_4 <= r_3); every sample lies in some rectangle or on the
    vertical tail; samples interior to a single rectangle satisfy that
    rectangle's profile through the turning density N = t'' r' - t' r''
    (concave graph: N <= 0; straight: N = 0; convex graph: N >= 0; graph
    rectangles also need r' >= 0); samples on shared rectangle boundaries
    may satisfy either neighbour; and above the top breakpoint height the
    curve is vertical.
    """
    P = curve.param_end
    bp = curve.breakpoints
    t_bp = np.array([p[0] for p in bp])
    r_bp = np.array([p[1] for p in bp])
    t_bar = curve.t_bar
    scale = 1.0 + abs(t_bar) + curve.r_bar

    ss = np.linspace(GRID_EPS * P, P, npoints)
    Ct = curve.gamma_t.coeffs(ss, 2)
    Cr = curve.gamma_r.coeffs(ss, 2)
    t, tdot, tdd = Ct[0], Ct[1], 2.0 * Ct[2]
    r, rdot, rdd = Cr[0], Cr[1], 2.0 * Cr[2]
    speed = np.hypot(tdot, rdot)
    N = tdd * rdot - tdot * rdd

    r_at_0 = float(curve.gamma_r.eval(0.0, 0))
    v0 = np.hypot(float(curve.gamma_t.eval(0.0, 1)), float(curve.gamma_r.eval(0.0, 1)))
    angle = abs(float(curve.gamma_t.eval(0.0, 1))) / v0 if v0 > 0 else np.inf

    tol_xy = 1e-7 * scale
    in_strip = (
        float(np.min(t)) >= -tol_xy
        and float(np.max(t)) <= t_bar + tol_xy
        and float(np.min(r)) >= -tol_xy
        and float(np.max(r)) <= curve.r_bar + tol_xy
    )

    # t_0 <= ... <= t_5 = t_bar and 0 = r_5 < r_4 <= r_3 < r_2 < r_1 < r_0 < r_bar.
    ordered = (
        bool(np.all(np.diff(t_bp) >= -1e-12))
        and abs(t_bp[5] - t_bar) <= 1e-7 * scale
        and abs(r_bp[5]) <= 1e-12
        and r_bp[4] > r_bp[5]
        and r_bp[3] >= r_bp[4] - 1e-15
        and r_bp[2] > r_bp[3]
        and r_bp[1] > r_bp[2]
        and r_bp[0] > r_bp[1]
        and r_bp[0] < curve.r_bar + 1e-12
    )

    # Rectangle membership (index i spans [t_i, t_{i+1}] x [r_{i+1}, r_i]).
    eligible = np.zeros((5, ss.size), dtype=bool)
    for i in range(5):
        lo_t, hi_t = t_bp[i], t_bp[i + 1]
        lo_r, hi_r = r_bp[i + 1], r_bp[i]
        eligible[i] = (
            (t >= lo_t - tol_xy)
            & (t <= hi_t + tol_xy)
            & (r >= lo_r - tol_xy)
            & (r <= hi_r + tol_xy)
        )
    top = r_bp[0]
    t_end = float(t[-1])
    on_tail = (r >= top - tol_xy) & (np.abs(t - t_end) <= tol_xy)
    covered = eligible.any(axis=0) | on_tail
    coverage = float(np.mean(covered))

    def _cond(kind, Ni, rdoti):
        if kind == "straight":
            return np.abs(Ni) <= _TURN_TOL
        mono = rdoti >= -_AXIS_TOL
        if kind == "graph_concave":
            return (Ni <= _TURN_TOL) & mono
        if kind == "graph_convex":
            return (Ni >= -_TURN_TOL) & mono
        raise ConstructionError(f"unknown rectangle profile kind: {kind}")

    n_eligible = eligible.sum(axis=0)
    ok_by_rect = np.stack([_cond(curve.segments[i], N, rdot) for i in range(5)])
    strict_pass = {}
    for i in range(5):
        mask = eligible[i] & (n_eligible == 1)
        strict_pass[i] = bool(np.all(ok_by_rect[i][mask])) if mask.any() else True
    boundary_mask = (n_eligible > 1) & ~on_tail
    if boundary_mask.any():
        any_ok = (ok_by_rect & eligible).any(axis=0)
        boundary_ok = bool(np.all(any_ok[boundary_mask]))
    else:
        boundary_ok = True

    concave_ids = [i for i, k in enumerate(curve.segments) if k == "graph_concave"]
    convex_ids = [i for i, k in enumerate(curve.segments) if k == "graph_convex"]
    straight_ids = [i for i, k in enumerate(curve.segments) if k == "straight"]

    tail_mask = r >= top - tol_xy
    if tail_mask.any():
        tail_dir = float(np.max(np.abs(tdot[tail_mask]) / speed[tail_mask]))
        tail_spread = float(np.max(np.abs(t[tail_mask] - t_end)))
    else:
        tail_dir = 0.0
        tail_spread = 0.0

    def _extreme(ids, reducer, default):
        vals = [reducer(N[eligible[i]]) for i in ids if eligible[i].any()]
        return float(reducer(np.array(vals))) if vals else default

    checks = {
        "starts_on_axis": abs(r_at_0) <= _AXIS_TOL * scale,
        "meets_axis_perpendicular": angle <= _ANGLE_TOL,
        "regular": float(np.min(speed)) >= _SPEED_FLOOR and v0 >= _SPEED_FLOOR,
        "image_in_strip": in_strip,
        "breakpoints_ordered": bool(ordered),
        "rectangles_cover_curve": bool(np.all(covered)),
        "concave_graph_rectangles": all(strict_pass[i] for i in concave_ids),
        "straight_rectangles": all(strict_pass[i] for i in straight_ids),
        "convex_graph_rectangles": all(strict_pass[i] for i in convex_ids),
        "rectangle_boundaries_consistent": boundary_ok,
        "vertical_above_top_breakpoint": tail_dir <= 1e-8 and tail_spread <= 1e-6 * scale,
    }
    details = {
        "t_bar": t_bar,
        "arc_length": curve.arc_length,
        "axis_angle": angle,
        "min_speed": float(min(np.min(speed), v0)),
        "coverage_fraction": coverage,
        "max_N_concave": _extreme(concave_ids, np.max, -np.inf),
        "min_N_convex": _extreme(convex_ids, np.min, np.inf),
        "max_abs_N_straight": _extreme(straight_ids, lambda x: np.max(np.abs(x)), 0.0),
        "top_breakpoint": float(top),
        "vertical_direction_residual": tail_dir,
        "vertical_t_spread": tail_spread,
    }
    return MembershipReport(checks, details)


def arc_length_param(curve, npoints=2048):
    """The curve reparameterised at unit speed on [0, l_gamma].

    Constructor-built curves are already unit speed and pass through
    unchanged.  Otherwise the length table s(sigma) is inverted inside the
    component rep trees, which needs a regular parameterisation (speed
    bounded away from zero).  The returned curve satisfies
    gamma_t'^2 + gamma_r'^2 = 1 to 1e-8 on a grid.
    """
    if curve.meta.get("unit_speed"):
        return curve
    P = curve.param_end
    speed = _speed_rep(curve.gamma_t, curve.gamma_r)
    probe = np.linspace(0.0, P, npoints)
    smin = float(np.min(speed.taylor(probe, 0)[0]))
    if smin < _SPEED_FLOOR:
        raise InvalidMetricError(
            f"parameterisation stalls (min speed {smin:.3e}): cannot re-parameterise"
        )
    s_node = Antider(speed, 0.0, 0.0)
    inv = InverseOf(s_node, 0.0, P)
    gt = WarpFunction(curve.arc_length, Compose(curve.gamma_t.rep, inv))
    gr = WarpFunction(curve.arc_length, Compose(curve.gamma_r.rep, inv))
    meta = dict(curve.meta)
    meta["unit_speed"] = True
    return AdmissibleCurve(
        gt,
        gr,
        curve.breakpoints,
        curve.r_bar,
        segments=curve.segments,
        arc_length=curve.arc_length,
        meta=meta,
    )


def s_gamma(curve, r_bar, r0):
    """Height-to-arc-length table map s_gamma: [0, r_bar] -> [0, l_gamma].

    Linear ramp s = l*r below r_bar - r0, the tail identity
    s = l - r_bar + r above r_bar - r0/2 (arc length measured back from
    the curve's far end along the vertical tail), and a monotone smooth
    join between.  The join crossfades the branch slopes and adds a
    compactly supported bump whose amplitude is solved exactly from the
    matching constraint s(r_bar - r0/2) = l - r0/2; the bump is the
    derivative of a smooth step, so its mass is exactly one.

    ``curve`` may be an AdmissibleCurve or a bare arc length l >= r_bar.
    Raises if l < r_bar or if no monotone join exists.
    """
    l = curve.arc_length if isinstance(curve, AdmissibleCurve) else float(curve)
    r_bar = float(r_bar)
    r0 = float(r0)
    if not (0.0 < r0 < r_bar):
        raise ConstructionError("need 0 < r0 < r_bar")
    if l < r_bar * (1.0 - 1e-12):
        raise ConstructionError(
            f"arc length {l} is below the ambient height {r_bar}: the table map cannot reach the far end"
        )
    a = r_bar - r0
    bjoin = r_bar - 0.5 * r0
    width = bjoin - a
    ramp = SmoothStep(a, bjoin)
    bump = Deriv(SmoothStep(a + 0.25 * width, bjoin - 0.25 * width))
    base = Sum((Const(l), ramp), (1.0, 1.0 - l))
    base_val = float(
        integrate_from(
            lambda x: base.taylor(np.asarray(x, dtype=float), 0)[0],
            0.0,
            np.array([bjoin]),
            tol=1e-13,
        )[0]
    )
    amp = (l - 0.5 * r0) - base_val
    slope = Sum((Const(l), ramp, bump), (1.0, 1.0 - l, amp))
    out = WarpFunction(r_bar, Antider(slope, 0.0, 0.0))
    grid = np.linspace(0.0, r_bar, 2048)
    dmin = float(np.min(out.eval(grid, 1)))
    if dmin < _SPEED_FLOOR:
        raise ConstructionError(
            f"no monotone join: table-map slope reaches {dmin:.3e}"
        )
    return out


def homotopy_to_vertical(curve, s):
    """Stage s in [0, 1] of the retraction onto the vertical line.

    Graph curves scale linearly in t by (1 - s).  Cap-led bending curves
    first shrink their cap radius and turn size multiplicatively, so the
    stage-s curve is the bending curve with delta(s) = (1-s) delta and
    turn top r0(s) = (1-s) r0; as s -> 1 the whole bent part collapses to
    the origin and the limit is the vertical line.  Every intermediate is
    again a constructor-built curve, and a curve vertical above r0 stays
    vertical above r0 throughout.  The vertical line is a fixed point.
    """
    s = float(s)
    if not (0.0 <= s <= 1.0):
        raise ConstructionError("homotopy stage must lie in [0, 1]")
    kind = curve.meta.get("kind")
    if kind == "vertical":
        return curve
    if kind == "gl":
        if s >= 1.0:
            return vertical_curve(curve.r_bar)
        delta = curve.meta["delta"] * (1.0 - s)
        r0 = curve.meta["first_bend"] * (1.0 - s)
        frac = curve.meta["neck_run"] / curve.meta["delta"]
        return gl_curve(
            delta,
            r0,
            curve.r_bar,
            bend_profile={"neck_run": frac * delta, "window": curve.meta["window"]},
        )
    if kind == "graph":
        profile = curve.meta["profile"]
        if s >= 1.0:
            return vertical_curve(curve.r_bar)
        scaled = WarpFunction(profile.domain_end, Sum((profile.rep,), (1.0 - s,)))
        return graph_curve(scaled)
    raise ConstructionError(
        "homotopy is defined for constructor-built curves (vertical, gl, graph)"
    )


def compose_warp(omega, curve):
    """The profile s -> omega(gamma_r(s)) on [0, l].

    l is the arc length of the curve's restriction to heights at most
    omega's domain end b: a curve topping out below b is used whole, one
    reaching above is cut where gamma_r = b (on the vertical tail for the
    constructor-built curves).  Requires a unit-speed curve, so the
    output's jets stay exact; requires omega to leave the origin like a
    disk profile (omega(0) = 0, omega'(0) = 1).  Full membership of the
    output, including curvature positivity for a chosen fibre dimension,
    is the caller's concern via check_W_membership.
    """
    if not curve.meta.get("unit_speed"):
        raise ConstructionError(
            "composition requires an arc-length parameterisation; apply arc_length_param first"
        )
    j0 = omega.jet_at(0.0)
    if abs(j0.entries[0]) > 1e-9 or abs(j0.entries[1] - 1.0) > 1e-9:
        raise InvalidMetricError(
            "profile must leave the origin with value 0 and slope 1"
        )
    b = omega.domain_end
    P = curve.param_end
    r_top = float(curve.gamma_r.eval(P, 0))
    if r_top > b + 1e-12:
        r_v = curve.meta.get("vertical_from")
        if r_v is not None and r_v <= b + 1e-12:
            l = P - (r_top - b)
        else:
            ss = np.linspace(0.0, P, 4096)
            rr = curve.gamma_r.eval(ss, 0)
            idx = int(np.argmax(rr > b))
            lo, hi = ss[max(idx - 1, 0)], ss[idx]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if float(curve.gamma_r.eval(mid, 0)) > b:
                    hi = mid
                else:
                    lo = mid
            l = 0.5 * (lo + hi)
        if abs(float(curve.gamma_r.eval(l, 0)) - b) > 1e-8 * max(b, 1.0):
            raise RangeError("could not cut the curve at the profile's domain end")
    else:
        l = P
    probe = np.linspace(0.0, l, 2048)
    if float(np.max(curve.gamma_r.eval(probe, 0))) > b * (1.0 + 1e-9):
        raise RangeError("curve height exceeds the profile's domain")
    return WarpFunction(l, Compose(omega.rep, curve.gamma_r.rep))


def curve_rows(curve, npoints=512):
    """Sample rows (s, t, r) for CSV emission."""
    ss = np.linspace(0.0, curve.param_end, npoints)
    return np.column_stack([ss, curve.gamma_t.eval(ss, 0), curve.gamma_r.eval(ss, 0)])


def curve_to_obj(curve):
    """JSON-ready descriptor; only constructor-built curve kinds qualify."""
    kind = curve.meta.get("kind")
    obj = {
        "kind": kind,
        "r_bar": curve.r_bar,
        "arc_length": curve.arc_length,
        "breakpoints": [[float(t), float(r)] for t, r in curve.breakpoints],
        "segments": list(curve.segments),
    }
    if kind == "vertical":
        return obj
    if kind == "gl":
        obj["params"] = {
            "delta": curve.meta["delta"],
            "r0": curve.meta["first_bend"],
            "neck_run": curve.meta["neck_run"],
            "window": curve.meta["window"],
        }
        return obj
    raise ConstructionError(f"no JSON descriptor for curve kind {kind!r}")


def curve_from_obj(obj):
    """Rebuild a curve from its JSON descriptor."""
    kind = obj.get("kind")
    if kind == "vertical":
        return vertical_curve(obj["r_bar"])
    if kind == "gl":
        p = obj["params"]
        return gl_curve(
            p["delta"],
            p["r0"],
            obj["r_bar"],
            bend_profile={"neck_run": p["neck_run"], "window": p["window"]},
        )
    raise ConstructionError(f"unknown curve kind {kind!r}")
