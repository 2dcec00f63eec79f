"""Torpedo profiles: spherical caps glued to cylindrical necks.

A torpedo function of radius delta is a disk profile eta: [0, b] -> [0, delta]
that is a spherical cap delta*sin(r/delta) near 0, is concave (eta'' <= 0,
strictly so near 0), and ends in a neck: eta == delta with every derivative
vanishing at b.  The induced disk metric dr^2 + eta(r)^2 ds^2 is a
hemispherical tip with a cylindrical neck.  The profile (alpha(r), eta(r))
with alpha(r) = int_r^b sqrt(1 - eta'(u)^2) du is the unit-speed plane curve
whose rotation sweeps out that disk embedded in Euclidean space.

The sine cap is joined to the constant neck through a mollified slowdown of
the cap's angular coordinate: eta(r) = delta * sin(psi(r)/delta) with
psi' = 1 - S for a smooth step S.  Since psi' in [0, 1], psi'' <= 0, and
psi <= delta*pi/2, both terms of

    eta'' = psi'' cos(psi/delta) - (psi'^2 / delta) sin(psi/delta)

are <= 0, so concavity is automatic rather than checked after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConstructionError, InvalidMetricError
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
    MembershipReport,
    Prod,
    SinCap,
    SmoothStep,
    Sqrt,
    Sum,
    WarpFunction,
    check_B_membership,
    glue,
)

__all__ = [
    "TorpedoSpec",
    "perfect_torpedo",
    "is_torpedo",
    "retract_to_perfect",
    "double_torpedo",
    "TorpedoCurve",
    "torpedo_curve",
    "alpha_ordinate",
    "DEFAULT_WINDOW",
]

# Half-width of the cap-to-neck mollification window, as a fraction of the
# neckline abscissa delta*pi/2 (total window width 0.05 * delta*pi/2).
DEFAULT_WINDOW = 0.025

_EQ_TOL = 1e-8


@dataclass(frozen=True)
class TorpedoSpec:
    """Radius, domain length, and neck onset of a torpedo profile."""

    delta: float
    domain_end: float
    neck_start: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ConstructionError("torpedo radius must be positive")
        if not 0 < self.neck_start <= self.domain_end:
            raise ConstructionError("neck_start must lie in (0, domain_end]")

    @classmethod
    def perfect(cls, delta, b):
        """Spec of the perfect torpedo: neck begins on the neckline r = delta*pi/2."""
        if b < delta * math.pi / 2:
            raise ConstructionError(
                f"neck too short: need b >= delta*pi/2 = {delta * math.pi / 2}, got {b}"
            )
        return cls(delta=float(delta), domain_end=float(b), neck_start=delta * math.pi / 2)


def perfect_torpedo(delta, b, window=DEFAULT_WINDOW):
    """The radius-delta torpedo delta*eta_1(r/delta) on [0, b].

    Equals delta*sin(r/delta) for r <= delta*pi/2*(1 - window) and the
    constant delta (all derivatives zero) for r >= delta*pi/2*(1 + window),
    with a concavity-preserving mollified join inside the window.  The join
    needs positive width, so the domain must exceed the neckline abscissa
    by a whisker: b >= delta*pi/2*(1 + 1e-3).
    """
    delta = float(delta)
    b = float(b)
    spec = TorpedoSpec.perfect(delta, b)  # validates b >= delta*pi/2
    L = spec.neck_start
    window = min(float(window), b / L - 1.0)
    if window < 1e-3:
        raise ConstructionError(
            "neck too short for a smooth join: need b >= delta*pi/2*(1 + 1e-3)"
        )
    h = window * L
    # psi(r) = int_0^r (1 - S); by symmetry of S about L the integral of the
    # ramp saturates at exactly L, so eta == delta*sin(L/delta) = delta past
    # the window.
    ramp = Sum((Const(1.0), SmoothStep(L - h, L + h)), (1.0, -1.0))
    psi = Antider(ramp, 0.0, 0.0)
    return WarpFunction(b, Compose(SinCap(delta), psi))


def _neck_start(grid, vals, slopes, delta):
    """Onset of the terminal flat run (value delta, zero slope), or None."""
    scale = max(abs(delta), 1.0)
    flat = (np.abs(vals - delta) <= _EQ_TOL * scale) & (np.abs(slopes) <= _EQ_TOL * scale)
    if not flat[-1]:
        return None
    idx = len(flat) - 1
    while idx > 0 and flat[idx - 1]:
        idx -= 1
    if idx > len(flat) - 2:
        return None  # fewer than two flat grid points: no measurable neck
    return float(grid[idx])


def is_torpedo(w, fibre_dim, npoints=1024, require_neck=True):
    """Report whether ``w`` satisfies the torpedo profile conditions.

    Checks disk-profile (B) membership with positive scalar curvature for
    the given disk dimension ``fibre_dim``, a positive horizontal endpoint
    eta(b) = delta with all K derivatives below 1e-8, concavity eta'' <= 0
    on the grid with strict concavity on an initial window, the implied
    slope bounds 0 <= eta' <= 1, and (optionally) an actual neck: a
    terminal run where the profile is flat at height delta.
    """
    from .curvature import scalar_curvature_single

    b = w.domain_end
    breport = check_B_membership(w, npoints=npoints)
    grid = np.linspace(GRID_EPS * b, b, npoints)
    C = w.coeffs(grid, 2)
    vals, d1, d2 = C[0], C[1], 2.0 * C[2]
    jb = w.jet_at(b)
    delta = jb.entries[0]
    end_derivs = max(abs(x) for x in jb.entries[1:])

    concave = d2 < -_EQ_TOL
    if not concave[0]:
        r_d = 0.0
    elif concave.all():
        r_d = float(grid[-1])
    else:
        r_d = float(grid[int(np.argmin(concave)) - 1])

    min_R = float("nan")
    curv_ok = False
    if breport.checks["positive_on_interior"]:
        R = scalar_curvature_single(w, fibre_dim, grid)
        min_R = float(np.min(R))
        curv_ok = min_R > 0.0

    neck = _neck_start(grid, vals, d1, delta)

    checks = {
        "b_membership": breport.passed,
        "curvature_positive": curv_ok,
        "endpoint_value_positive": delta > 0.0,
        "endpoint_derivatives_vanish": end_derivs <= _EQ_TOL,
        "concave": bool(np.max(d2) <= 1e-10),
        "strictly_concave_near_zero": r_d > 0.0,
        "slope_within_unit_interval": bool(
            np.min(d1) >= -1e-10 and np.max(d1) <= 1.0 + 1e-10
        ),
    }
    if require_neck:
        checks["has_neck"] = neck is not None
    details = {
        "delta": delta,
        "endpoint_derivative_sup": end_derivs,
        "max_second_derivative": float(np.max(d2)),
        "strict_concavity_window_end": r_d,
        "min_scalar_curvature": min_R,
        "neck_start": float("nan") if neck is None else neck,
        "min_slope": float(np.min(d1)),
        "max_slope": float(np.max(d1)),
    }
    return MembershipReport(checks, details)


def retract_to_perfect(w, fibre_dim, window=DEFAULT_WINDOW, check_path=True):
    """The perfect torpedo that the torpedo space retracts ``w`` onto.

    The target radius is min(2b/pi, w(b)).  When that radius saturates the
    domain (w(b) >= 2b/pi) the smooth join needs room, so the constructed
    radius backs off by the join-window factor; the straight-line homotopy
    (1-t)*target + t*w is verified to stay inside the torpedo space at
    t in {0, 0.25, 0.5, 0.75, 1} (the space is convex).
    """
    report = is_torpedo(w, fibre_dim)
    if not report.passed:
        raise ConstructionError(f"retract_to_perfect needs a torpedo input:\n{report}")
    b = w.domain_end
    target = min(2.0 * b / math.pi, w(b))
    # Leave room for the mollified join and a visible neck.
    cap = 0.95 * 2.0 * b / (math.pi * (1.0 + window))
    radius = min(target, cap)
    out = perfect_torpedo(radius, b, window=window)
    if check_path:
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            mix = Sum((out.rep, w.rep), (1.0 - t, t))
            rep_t = is_torpedo(WarpFunction(b, mix), fibre_dim)
            if not rep_t.passed:
                raise ConstructionError(
                    f"retract homotopy left the torpedo space at t={t}:\n{rep_t}"
                )
    return out


def double_torpedo(eta, fibre_dim=3):
    """Mirror-double a torpedo on [0, m] into a capsule profile on [0, 2m].

    The double profile is eta(t) for t <= m and eta(2m - t) for t >= m,
    glued across the shared neck where both branches are constant delta, so
    the output is symmetric about m and meets the sphere-profile endpoint
    conditions (value 0, slope +-1, vanishing even derivatives) at both ends.

    The mirrored branch evaluates ``eta``'s rep a half-window beyond its
    domain; every torpedo this library constructs extends constantly there.
    """
    report = is_torpedo(eta, fibre_dim)
    if not report.passed:
        raise ConstructionError(f"double_torpedo needs a torpedo input:\n{report}")
    m = eta.domain_end
    neck = report.details["neck_start"]
    width = min(0.5 * (m - neck), 0.1 * m)
    if not width > 0:
        raise ConstructionError("input neck leaves no room to glue the mirror image")
    mirrored = Compose(eta.rep, Affine(2.0 * m, -1.0))
    return WarpFunction(2.0 * m, glue(eta.rep, mirrored, at=m, width=2.0 * width))


def alpha_ordinate(beta):
    """The abscissa alpha(r) = int_r^b sqrt(1 - beta'(u)^2) du as a WarpFunction.

    (alpha(r), beta(r)) is then a unit-speed plane curve: alpha' = -sqrt(1-beta'^2).
    Requires |beta'| <= 1; alpha(b) = 0.
    """
    b = beta.domain_end
    grid = np.linspace(0.0, b, 2048)
    slopes = beta.eval(grid, 1)
    if np.max(np.abs(slopes)) > 1.0 + 1e-9:
        raise InvalidMetricError(
            f"|beta'| reaches {np.max(np.abs(slopes))}: not unit-speed compatible"
        )
    d = Deriv(beta.rep)
    speed = Sqrt(Sum((Const(1.0), Prod((d, d))), (1.0, -1.0)))
    total = float(
        integrate_from(lambda x: speed.taylor(x, 0)[0], 0.0, np.array([b]), tol=QUAD_TOL)[0]
    )
    rep = Sum((Const(total), Antider(speed, 0.0, 0.0)), (1.0, -1.0))
    return WarpFunction(b, rep)


@dataclass(frozen=True)
class TorpedoCurve:
    """Sampled unit-speed plane curve (alpha(r), beta(r)) of a disk profile."""

    r: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_fn: WarpFunction
    beta_fn: WarpFunction
    unit_speed_residual: float
    axis_angle_residual: float

    def rows(self):
        """Sample rows (r, alpha, beta) for CSV emission."""
        return np.column_stack([self.r, self.alpha, self.beta])


def torpedo_curve(beta, npoints=512):
    """The plane curve swept by the profile ``beta``, with unit-speed checks.

    alpha(r) = alpha_0 - int_0^r sqrt(1 - beta'^2) with alpha_0 chosen so
    alpha(b) = 0.  The samples satisfy alpha'^2 + beta'^2 = 1 (the residual
    uses the rep tree's exact derivatives; quadrature enters only through
    the value row) and the curve meets the horizontal axis at angle pi/2,
    checked as alpha'(0) = 0.
    """
    alpha_fn = alpha_ordinate(beta)  # raises if |beta'| > 1
    b = beta.domain_end
    r = np.linspace(0.0, b, npoints)
    a_vals = alpha_fn.eval(r, 0)
    b_vals = beta.eval(r, 0)
    interior = np.linspace(GRID_EPS * b, b, npoints)
    da = alpha_fn.eval(interior, 1)
    db = beta.eval(interior, 1)
    residual = float(np.max(np.abs(da**2 + db**2 - 1.0)))
    angle_residual = abs(alpha_fn.eval(0.0, 1))
    return TorpedoCurve(
        r=r,
        alpha=a_vals,
        beta=b_vals,
        alpha_fn=alpha_fn,
        beta_fn=beta,
        unit_speed_residual=residual,
        axis_angle_residual=angle_residual,
    )
