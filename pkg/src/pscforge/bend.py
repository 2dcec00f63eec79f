"""Bending cylinders into boots and steps.

A cylinder g + dt^2 over a rotationally symmetric slice is bent by the
pullback construction: with (alpha, beta) the unit-speed profile curve of
the slice, the bent metric is the doubly warped

    dr^2 + beta(r)^2 ds^2_{n-1} + (c + alpha(r))^2 dl^2,

positive for sufficiently large bend radius c; the hard embedding
constraint is c > 2 max beta.  ``min_bend_radius`` searches the smallest
certified c.

The transition family w_theta(r, t) on [0, b] x [-L, L + theta] drives
the gradual bend: w = 1 near both t-ends (straight cylinder), exactly
c + alpha(r) on t in [0, theta] once theta >= theta_0, with |dw/dr| <= 1
and d2w/dr2 <= 0 verified on a grid.  The family metrics

    g_theta^c = dr^2 + w_theta(r, t)^2 dt^2 + eta_delta(r)^2 ds^2_{n-2}

are certified through ``bend_family_curvature`` over an (r, t, theta)
grid.  Boot metrics assemble a toe (hemi-disk plus cylinder), the bend
corner, a vertical leg and a flat corner filler, with interface
continuity checked on matched grids; step metrics iterate partial bends
on nested sub-intervals and retract back to the torpedo cylinder.

Note on the family formula's cross coefficient: certification uses the
printed form with the -(2n/beta) beta_r w_r / w term.  The general
doubly warped computation over the (r, t) base surface gives the
coefficient 2(n-2) for that term, so the two forms differ by
-4 beta_r w_r / (beta w), nonnegative wherever beta_r w_r <= 0 (the cap
zone of a torpedo slice, where beta_r >= 0 and w_r = m alpha' <= 0).
The test suite measures this difference against a finite-difference
oracle on the full chart and records that the general form also stays
positive at every certified example, so no verdict in this module
depends on the discrepancy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Tuple

import numpy as np

from .curvature import (
    POSITIVITY_FLOOR,
    CurvatureFamily,
    GridSpec,
    PositivityCertificate,
    RotSymMetric,
    bend_family_curvature,
    certify_positive,
    scalar_curvature_single,
)
from .errors import (
    ConstructionError,
    InvalidMetricError,
    NoCertificateError,
    RangeError,
)
from .torpedo import alpha_ordinate, is_torpedo, perfect_torpedo
from .warp import GRID_EPS, Const, Prod, SmoothStep, Sum, WarpFunction

__all__ = [
    "BendRadius",
    "BendSlice",
    "BootAssembly",
    "BootIsotopySlice",
    "BootRegion",
    "BootSpec",
    "InterfaceCheck",
    "StepBase",
    "StepMetric",
    "StepRetract",
    "StepSpec",
    "StepStage",
    "TransitionProfile",
    "bent_cylinder_metric",
    "bend_isotopy",
    "boot_isotopy",
    "boot_metric",
    "min_bend_radius",
    "step_metric",
    "step_retract",
    "transition_profile",
]

_LOG = logging.getLogger("pscforge.bend")

# Angle from which the transition profile carries the full bend exactly.
_THETA0 = 0.1 * (0.5 * math.pi)

# Mollified joins (height steps, blend windows) use this fraction of the
# shorter adjacent extent as their transition width.
_JOIN_FRACTION = 0.05

_INTERFACE_TOL = 1e-6


def _max_on_grid(fn, npoints=2048):
    grid = np.linspace(0.0, fn.domain_end, npoints)
    return float(np.max(fn.eval(grid, 0)))


def bent_cylinder_metric(beta, c, n):
    """The bent cylinder dr^2 + beta^2 ds^2_{n-1} + (c + alpha)^2 dl^2.

    ``alpha`` is the unit-speed ordinate of the profile curve,
    alpha' = -sqrt(1 - beta'^2) with alpha(b) = 0, built as a rep tree;
    the identity alpha'^2 + beta'^2 = 1 is re-verified on a grid.  The
    independent jet route to the same curvature is
    ``curvature.bent_cylinder_curvature``.
    """
    if n < 2:
        raise InvalidMetricError("bent cylinder needs dimension n >= 2")
    alpha = alpha_ordinate(beta)  # raises if |beta'| > 1
    b = beta.domain_end
    if not c > 2.0 * _max_on_grid(beta):
        raise InvalidMetricError(
            "invalid bend: the embedding needs c > 2 max beta"
        )
    interior = np.linspace(GRID_EPS * b, b, 1024)
    residual = alpha.eval(interior, 1) ** 2 + beta.eval(interior, 1) ** 2 - 1.0
    if float(np.max(np.abs(residual))) > 1e-9:
        raise ConstructionError(
            f"unit-speed identity violated by {np.max(np.abs(residual)):.3e}"
        )
    psi = WarpFunction(b, Sum((Const(float(c)), alpha.rep), (1.0, 1.0)))
    return RotSymMetric.doubly_warped(phi=beta, psi=psi, sphere_dim=n - 1)


@dataclass(frozen=True)
class BendRadius:
    """Search record for the smallest certified bend radius.

    ``c_star`` is grid-certified; ``embedding_floor`` = 2 max beta is the
    hard lower constraint; ``analytic_round_bound`` = 2 max beta / (n-1)
    is the round-case sufficient curvature bound, reported for
    comparison (it never exceeds the embedding floor for n >= 3).
    """

    c_star: float
    embedding_floor: float
    analytic_round_bound: float
    certificate: PositivityCertificate
    search: Tuple[Tuple[float, bool, float], ...]

    def to_obj(self):
        return {
            "c_star": self.c_star,
            "embedding_floor": self.embedding_floor,
            "analytic_round_bound": self.analytic_round_bound,
            "certificate": self.certificate.to_obj(),
            "search": [[c, p, m] for c, p, m in self.search],
        }


def min_bend_radius(beta, n, floor=POSITIVITY_FLOOR, npoints=512,
                    max_doublings=20, bisection_steps=20):
    """Smallest certified bend radius for the cylinder over ``beta``.

    Doubling from just above the embedding floor 2 max beta until the
    bent cylinder certifies, then bisection toward the floor; the floor
    itself is an open constraint, so every candidate stays strictly
    above it.
    """
    if n < 3:
        raise InvalidMetricError("bend radius search needs dimension n >= 3")
    b = beta.domain_end
    interior = np.linspace(GRID_EPS * b, b * (1.0 - GRID_EPS), npoints)
    if np.any(beta.eval(interior, 0) <= 0.0):
        raise InvalidMetricError("profile must be positive on the interior")
    alpha_ordinate(beta)  # |beta'| <= 1 gate
    floor_c = 2.0 * _max_on_grid(beta)
    search = []

    # Sphere profiles vanish at both ends, so the certification grid
    # stays strictly interior (the endpoint curvature is a smooth limit).
    grid = GridSpec((("r", GRID_EPS * b, (1.0 - GRID_EPS) * b, npoints),))

    def attempt(c):
        metric = bent_cylinder_metric(beta, c, n)
        cert = certify_positive(metric, grid=grid, floor=floor)
        search.append((float(c), bool(cert.passed), float(cert.margin)))
        return cert

    cand = 2.0 * floor_c
    star = None
    for _ in range(max_doublings):
        cert = attempt(cand)
        if cert.passed:
            hi, star = cand, cert
            break
        cand *= 2.0
    if star is None:
        best = max(m for _, _, m in search)
        raise NoCertificateError(
            f"no certified bend radius up to {cand:g} (best margin {best:.3e})"
        )
    lo = floor_c
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        if not mid > floor_c:
            break
        cert = attempt(mid)
        if cert.passed:
            hi, star = mid, cert
        else:
            lo = mid
    return BendRadius(
        c_star=float(hi),
        embedding_floor=float(floor_c),
        analytic_round_bound=float(2.0 * _max_on_grid(beta) / (n - 1)),
        certificate=star,
        search=tuple(search),
    )


@dataclass(frozen=True)
class TransitionProfile:
    """The two-variable bend driver w_theta(r, t) on [0, b] x [-L, L+theta].

    w = 1 + m(t) (c + alpha(r) - 1) where the t-blend m rises from 0 to
    ``amplitude`` before t = 0 and falls back after t = theta, with
    exact flat zones near both ends; amplitude is exactly 1 once
    theta >= theta0 and exactly 0 at theta = 0.  r-derivatives come from
    alpha's jets: dw/dr = m alpha', d2w/dr2 = m alpha''; no t-derivative
    of w enters any curvature formula used here.
    """

    theta: float
    L: float
    c: float
    theta0: float
    alpha: WarpFunction
    amplitude: float
    blend: WarpFunction  # on the shifted coordinate tau = t + L

    def _blend_at(self, t):
        tau = np.asarray(t, dtype=float) + self.L
        if np.any(tau < -1e-12) or np.any(tau > self.blend.domain_end + 1e-12):
            raise RangeError(
                f"t must lie in [{-self.L}, {self.L + self.theta}]"
            )
        tau = np.clip(tau, 0.0, self.blend.domain_end)
        return self.amplitude * self.blend.eval(tau, 0)

    def w_jets(self, r, t):
        """(w, dw/dr, d2w/dr2) at broadcast (r, t) points."""
        rr = np.asarray(r, dtype=float)
        m = self._blend_at(t)
        A = self.alpha.coeffs(rr, 2)
        w = 1.0 + m * (self.c + A[0] - 1.0)
        return w, m * A[1], m * (2.0 * A[2])

    def __call__(self, r, t):
        return self.w_jets(r, t)[0]


def transition_profile(theta, L, c, alpha, theta0=_THETA0):
    """Build and verify the bend driver w_theta.

    Conditions checked on a grid: c + alpha >= 1 (so w >= 1 throughout),
    |alpha'| <= 1 and alpha'' <= 0 (these give |dw/dr| <= 1 and
    d2w/dr2 <= 0 since the t-blend stays in [0, 1]).
    """
    if not 0.0 <= theta <= 0.5 * math.pi + 1e-12:
        raise RangeError("bend angle must lie in [0, pi/2]")
    if not L > 0.0:
        raise ConstructionError("flank length must be positive")
    if not theta0 > 0.0:
        raise ConstructionError("full-bend threshold must be positive")
    b = alpha.domain_end
    # alpha'' is a 0/0 limit at a cap tip (beta' = 1 there), so the
    # condition grid stays strictly interior.
    grid = np.linspace(GRID_EPS * b, b * (1.0 - GRID_EPS), 1024)
    A = alpha.coeffs(grid, 2)
    if float(np.min(c + A[0])) < 1.0 - 1e-12:
        raise ConstructionError("w >= 1 needs c + alpha >= 1 everywhere")
    if float(np.max(np.abs(A[1]))) > 1.0 + 1e-9:
        raise ConstructionError("|dw/dr| <= 1 fails for the requested alpha")
    if float(np.max(2.0 * A[2])) > 1e-9:
        raise ConstructionError(
            "d2w/dr2 <= 0 fails for the requested alpha "
            f"(max alpha'' = {float(np.max(2.0 * A[2])):.3e})"
        )
    amplitude = float(
        WarpFunction(math.pi, SmoothStep(0.0, theta0)).eval(min(theta, math.pi))
    )
    rise = SmoothStep(0.1 * L, 0.8 * L)
    fall = Sum(
        (Const(1.0), SmoothStep(L + theta + 0.2 * L, L + theta + 0.9 * L)),
        (1.0, -1.0),
    )
    blend = WarpFunction(2.0 * L + theta, Prod((rise, fall)))
    return TransitionProfile(
        theta=float(theta),
        L=float(L),
        c=float(c),
        theta0=float(theta0),
        alpha=alpha,
        amplitude=amplitude,
        blend=blend,
    )


@dataclass(frozen=True)
class BendSlice:
    """A certified member of the bend family g_theta^c.

    ``certificate`` covers the whole sub-family up to this slice's angle
    on an (r, t_frac, theta) grid, where t_frac in [0, 1] parameterizes
    each angle's own interval [-L, L + theta'].
    """

    theta: float
    c: float
    n: int
    L: float
    eta: WarpFunction
    profile: TransitionProfile
    certificate: PositivityCertificate

    def curvature(self, r, t):
        return bend_family_curvature(self.eta, self.profile, self.n, r, t)

    def to_obj(self):
        return {
            "theta": self.theta,
            "c": self.c,
            "n": self.n,
            "L": self.L,
            "certificate": self.certificate.to_obj(),
        }


def _family_certificate(eta, n, c, theta, L, grid_counts, floor):
    b = eta.domain_end
    alpha = alpha_ordinate(eta)
    nr, nt, nth = grid_counts
    spec = GridSpec(
        (
            ("r", GRID_EPS * b, b, nr),
            ("t_frac", 0.0, 1.0, nt),
            ("theta", 0.0, theta, nth if theta > 0.0 else 1),
        )
    )
    cache = {}

    def evaluate(r_flat, f_flat, th_flat):
        R = np.empty_like(r_flat)
        for th in np.unique(th_flat):
            mask = th_flat == th
            key = float(th)
            if key not in cache:
                cache[key] = transition_profile(key, L, c, alpha)
            prof = cache[key]
            tt = -L + f_flat[mask] * (2.0 * L + key)
            R[mask] = bend_family_curvature(eta, prof, n, r_flat[mask], tt)
        return R

    cert = certify_positive(CurvatureFamily(spec, evaluate), floor=floor)
    top = cache.get(float(theta)) or transition_profile(theta, L, c, alpha)
    return cert, top


def bend_isotopy(eta, n, c, theta, L=0.5 * math.pi,
                 grid_counts=(96, 33, 17), floor=POSITIVITY_FLOOR,
                 require_torpedo=True):
    """Certified slice of the cylinder bend family at ``theta``.

    The certificate sweeps the whole sub-family theta' in [0, theta]; a
    failure raises with the worst (r, t, theta) point.  theta = 0 is the
    unbent product cylinder (w identically 1).  The slice profile is a
    torpedo in the boot and step constructions; ``require_torpedo=False``
    admits any profile meeting the transition conditions (the round
    hemisphere slice is the canonical example: it has no neck).
    """
    if n < 3:
        raise InvalidMetricError("bend family needs dimension n >= 3")
    if require_torpedo:
        report = is_torpedo(eta, n - 1)
        if not report.passed:
            failed = [k for k, ok in report.checks.items() if not ok]
            raise InvalidMetricError(
                f"bend_isotopy needs a torpedo slice ({failed})"
            )
    if not c > 2.0 * _max_on_grid(eta):
        raise InvalidMetricError("bend radius below the embedding floor 2 max eta")
    if not 0.0 <= theta <= 0.5 * math.pi + 1e-12:
        raise RangeError("bend angle must lie in [0, pi/2]")
    cert, profile = _family_certificate(eta, n, c, theta, L, grid_counts, floor)
    if not cert.passed:
        raise NoCertificateError(
            f"bend family loses positivity (min R = {cert.min_R:.3e} at "
            f"{dict(cert.argmin)})"
        )
    return BendSlice(
        theta=float(theta), c=float(c), n=int(n), L=float(L),
        eta=eta, profile=profile, certificate=cert,
    )


# ---------------------------------------------------------------------------
# Boot metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BootSpec:
    """Parameters of the boot g_boot^n(delta)_{l1, l2}.

    ``l1`` is the toe's torpedo neck length, ``l2`` the prescribed
    length of the vertical boundary cylinder, ``c`` the bend radius.
    ``region_lengths`` records the extent bookkeeping per region; it is
    derived when not supplied.
    """

    delta: float
    l1: float
    l2: float
    c: float
    n: int
    region_lengths: Optional[Mapping[str, float]] = None
    bend_flank: float = 0.5 * math.pi

    def __post_init__(self):
        if not self.c > 2.0 * self.delta:
            raise InvalidMetricError("boot needs bend radius c > 2 delta")
        if not (self.l1 > 0.0 and self.l2 > 0.0):
            raise InvalidMetricError("boot neck lengths must be positive")
        if self.n < 4:
            raise InvalidMetricError("boot metrics need dimension n >= 4")
        if not self.delta > 0.0:
            raise InvalidMetricError("boot radius must be positive")
        if self.region_lengths is None:
            b = self.profile_domain
            lengths = {
                "R1": b,
                "R2": 2.0 * self.bend_flank + 0.5 * math.pi,
                "R3": self.l2,
                "R4": b,
            }
            object.__setattr__(self, "region_lengths", lengths)

    @property
    def profile_domain(self):
        """Torpedo profile domain: quarter-cap arc plus the l1 neck."""
        return self.delta * 0.5 * math.pi + self.l1

    def to_obj(self):
        return {
            "delta": self.delta,
            "l1": self.l1,
            "l2": self.l2,
            "c": self.c,
            "n": self.n,
            "region_lengths": dict(self.region_lengths),
            "bend_flank": self.bend_flank,
        }


@dataclass(frozen=True)
class BootRegion:
    """One assembled region with its positivity certificate."""

    name: str
    role: str
    extent: Mapping[str, float]
    sphere_dim: int
    certificate: PositivityCertificate

    def to_obj(self):
        return {
            "name": self.name,
            "role": self.role,
            "extent": dict(self.extent),
            "sphere_dim": self.sphere_dim,
            "certificate": self.certificate.to_obj(),
        }


@dataclass(frozen=True)
class InterfaceCheck:
    """Matched-grid continuity record for one region interface."""

    pair: str
    coefficient: str
    value_mismatch: float
    slope_mismatch: float
    tol: float
    passed: bool

    def to_obj(self):
        return {
            "pair": self.pair,
            "coefficient": self.coefficient,
            "value_mismatch": self.value_mismatch,
            "slope_mismatch": self.slope_mismatch,
            "tol": self.tol,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class BootAssembly:
    """The four-region boot with interface report and certificates."""

    spec: BootSpec
    eta: WarpFunction
    bend: BendSlice
    regions: Tuple[BootRegion, ...]
    interfaces: Tuple[InterfaceCheck, ...]
    join_width: float
    passed: bool

    def region(self, name):
        for reg in self.regions:
            if reg.name == name:
                return reg
        raise KeyError(name)

    def trace_rows(self, per_region=64):
        """(region, r, t, R) sample rows across all four regions."""
        spec = self.spec
        b = spec.profile_domain
        rows = []
        rr = np.linspace(GRID_EPS * b, b, per_region)
        cap = scalar_curvature_single(self.eta, spec.n - 1, rr)
        for r, R in zip(rr, cap):
            rows.append(("R1", float(r), 0.0, float(R)))
        side = max(4, int(math.isqrt(per_region)))
        rg = np.linspace(GRID_EPS * b, b, side)
        L, theta = self.bend.L, self.bend.theta
        tg = np.linspace(-L, L + theta, side)
        Rm, Tm = np.meshgrid(rg, tg, indexing="ij")
        Rb = self.bend.curvature(Rm.ravel(), Tm.ravel())
        for r, t, R in zip(Rm.ravel(), Tm.ravel(), Rb):
            rows.append(("R2", float(r), float(t), float(R)))
        leg = scalar_curvature_single(self.eta, spec.n - 1, rr)
        for r, R in zip(rr, leg):
            rows.append(("R3", float(r), 0.5 * spec.l2, float(R)))
        flat = (spec.n - 2) * (spec.n - 3) / spec.delta**2
        for r in np.linspace(0.0, spec.region_lengths["R4"], per_region // 4):
            rows.append(("R4", float(r), 0.0, float(flat)))
        return rows

    def to_obj(self):
        return {
            "spec": self.spec.to_obj(),
            "regions": [reg.to_obj() for reg in self.regions],
            "interfaces": [ifc.to_obj() for ifc in self.interfaces],
            "join_width": self.join_width,
            "passed": self.passed,
        }


def _interface_rows(pair, coefficients, tol=_INTERFACE_TOL):
    """Build InterfaceCheck rows from (name, lhs, rhs, dlhs, drhs) tuples."""
    rows = []
    for name, lhs, rhs, dl, dr in coefficients:
        v = float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))
        s = float(np.max(np.abs(np.asarray(dl) - np.asarray(dr))))
        rows.append(
            InterfaceCheck(
                pair=pair, coefficient=name, value_mismatch=v,
                slope_mismatch=s, tol=tol, passed=bool(v <= tol and s <= tol),
            )
        )
    return rows


def boot_metric(spec, floor=POSITIVITY_FLOOR, npoints=512,
                grid_counts=(96, 33, 17)):
    """Assemble the boot: toe, bend corner, vertical leg, flat filler.

    Every region is certified and the interface report checks value and
    first-derivative continuity of the metric coefficients (the sphere
    warp and the t-warp) across R1|R2, R2|R3 and R3|R4 on matched grids.
    """
    n, delta = spec.n, spec.delta
    b = spec.profile_domain
    eta = perfect_torpedo(delta, b)
    bend = bend_isotopy(
        eta, n, spec.c, 0.5 * math.pi, L=spec.bend_flank,
        grid_counts=grid_counts, floor=floor,
    )

    cap_cert = certify_positive(
        RotSymMetric.single_warped(eta, n - 1), npoints=npoints, floor=floor
    )
    cyl_cert = certify_positive(
        RotSymMetric.product_with_line(RotSymMetric.single_warped(eta, n - 2)),
        npoints=npoints,
        floor=floor,
    )
    toe_cert = cap_cert if cap_cert.margin <= cyl_cert.margin else cyl_cert
    leg_cert = certify_positive(
        RotSymMetric.product_with_line(RotSymMetric.single_warped(eta, n - 2)),
        npoints=npoints,
        floor=floor,
    )
    flat_profile = WarpFunction(spec.region_lengths["R4"], Const(delta))
    corner_cert = certify_positive(
        RotSymMetric.product_with_line(
            RotSymMetric.product_with_line(
                RotSymMetric.single_warped(flat_profile, n - 2)
            )
        ),
        npoints=max(64, npoints // 8),
        floor=floor,
    )

    regions = (
        BootRegion(
            name="R1", role="toe",
            extent={"r": b, "t": spec.region_lengths["R1"]},
            sphere_dim=n - 2, certificate=toe_cert,
        ),
        BootRegion(
            name="R2", role="bend",
            extent={"r": b, "t": spec.region_lengths["R2"]},
            sphere_dim=n - 2, certificate=bend.certificate,
        ),
        BootRegion(
            name="R3", role="leg",
            extent={"r": b, "t": spec.region_lengths["R3"]},
            sphere_dim=n - 2, certificate=leg_cert,
        ),
        BootRegion(
            name="R4", role="corner",
            extent={"r": spec.region_lengths["R4"], "t": spec.region_lengths["R4"]},
            sphere_dim=n - 2, certificate=corner_cert,
        ),
    )

    # Matched-grid interfaces.  The t-warp enters with its flat zones at
    # the bend's ends, so the mismatches are exact zeros up to rep-tree
    # evaluation noise; the report measures them anyway.
    rr = np.linspace(GRID_EPS * b, b, 129)
    L, theta = bend.L, bend.theta
    h = 1e-6 * max(1.0, L)
    w_in, _, _ = bend.profile.w_jets(rr, np.full_like(rr, -L))
    w_in_s = (bend.profile(rr, -L + h) - w_in) / h
    w_out, _, _ = bend.profile.w_jets(rr, np.full_like(rr, L + theta))
    w_out_s = (w_out - bend.profile(rr, L + theta - h)) / h
    ones = np.ones_like(rr)
    zeros = np.zeros_like(rr)
    eta_v = eta.eval(rr, 0)
    eta_s = zeros  # the slice profile does not move along t in any region

    interfaces = []
    interfaces += _interface_rows(
        "R1|R2",
        (
            ("sphere_warp", eta_v, eta_v, eta_s, eta_s),
            ("t_warp", ones, w_in, zeros, w_in_s),
        ),
    )
    interfaces += _interface_rows(
        "R2|R3",
        (
            ("sphere_warp", eta_v, eta_v, eta_s, eta_s),
            ("t_warp", w_out, ones, w_out_s, zeros),
        ),
    )
    # R3|R4 meet along the neck boundary r = b: sphere warp delta vs
    # delta, slopes eta'(b) vs 0, both warps constant in t.
    tt = np.linspace(0.0, spec.l2, 65)
    neck_v = np.full_like(tt, eta.eval(b, 0))
    neck_s = np.full_like(tt, eta.eval(b, 1))
    interfaces += _interface_rows(
        "R3|R4",
        (
            ("sphere_warp", neck_v, np.full_like(tt, delta), neck_s, np.zeros_like(tt)),
            ("t_warp", np.ones_like(tt), np.ones_like(tt), np.zeros_like(tt), np.zeros_like(tt)),
        ),
    )

    interfaces = tuple(interfaces)
    bad = [ifc for ifc in interfaces if not ifc.passed]
    if bad:
        worst = max(
            bad, key=lambda ifc: max(ifc.value_mismatch, ifc.slope_mismatch)
        )
        raise ConstructionError(
            f"boot assembly interface {worst.pair}/{worst.coefficient} "
            f"mismatch {max(worst.value_mismatch, worst.slope_mismatch):.3e} "
            f"exceeds {worst.tol:g}"
        )
    passed = all(reg.certificate.passed for reg in regions)
    join_width = _JOIN_FRACTION * min(
        spec.region_lengths["R2"], spec.region_lengths["R3"]
    )
    return BootAssembly(
        spec=spec, eta=eta, bend=bend, regions=regions,
        interfaces=interfaces, join_width=float(join_width), passed=bool(passed),
    )


@dataclass(frozen=True)
class BootIsotopySlice:
    """One parameter value of the cylinder-to-boot isotopy."""

    u: float
    theta: float
    l2_star: float
    spec: BootSpec
    certificate: PositivityCertificate
    bend: Optional[BendSlice]
    search: Tuple[Tuple[float, bool], ...]

    def to_obj(self):
        return {
            "u": self.u,
            "theta": self.theta,
            "l2_star": self.l2_star,
            "spec": self.spec.to_obj(),
            "certificate": self.certificate.to_obj(),
            "search": [[l, p] for l, p in self.search],
        }


def _boot_drop(spec):
    """Vertical room the fully pushed-out toe consumes: c + alpha(0)."""
    eta = perfect_torpedo(spec.delta, spec.profile_domain)
    alpha0 = float(alpha_ordinate(eta).eval(0.0, 0))
    return spec.c + alpha0


def boot_isotopy(delta, l1, n, u, c=None, floor=POSITIVITY_FLOOR,
                 l2_initial=1.0, max_doublings=20, bisection_steps=20,
                 grid_counts=(64, 17, 9)):
    """Slice of the isotopy from the product cylinder to the boot.

    u = 0 is the product g_torp^{n-1}(delta) + dt^2 (its certificate is
    the plain cylinder's); u = 1 is the assembled boot.  l2_star is the
    searched sufficient vertical length: a candidate passes when it
    leaves room for the fully bent toe (l2 > c + alpha(0), the exit
    displacement) and the assembly at that length certifies.  Curvature
    does not depend on l2, so the search tightens to the geometric
    floor; the witness records both facts.
    """
    if n < 4:
        raise InvalidMetricError("boot isotopy needs dimension n >= 4")
    if not 0.0 <= u <= 1.0:
        raise RangeError("isotopy parameter must lie in [0, 1]")
    if c is None:
        c = 2.1 * delta
    probe = BootSpec(delta=delta, l1=l1, l2=max(l2_initial, 1e-6), c=c, n=n)
    drop = _boot_drop(probe)
    search = []

    def attempt(l2):
        if not l2 > drop:
            search.append((float(l2), False))
            return None
        spec = BootSpec(delta=delta, l1=l1, l2=l2, c=c, n=n)
        assembly = boot_metric(spec, floor=floor, grid_counts=grid_counts)
        search.append((float(l2), bool(assembly.passed)))
        return assembly if assembly.passed else None

    cand = float(l2_initial)
    star = None
    for _ in range(max_doublings):
        got = attempt(cand)
        if got is not None:
            hi, star = cand, got
            break
        cand *= 2.0
    if star is None:
        raise NoCertificateError(
            f"no sufficient vertical length up to {cand:g} "
            f"(geometric floor is {drop:g})"
        )
    lo = min(drop, hi)
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        got = attempt(mid)
        if got is not None:
            hi, star = mid, got
        else:
            lo = mid
    l2_star = float(hi)

    theta = u * 0.5 * math.pi
    spec = BootSpec(delta=delta, l1=l1, l2=l2_star, c=c, n=n)
    eta = star.eta
    if u == 0.0:
        cert = certify_positive(
            RotSymMetric.product_with_line(
                RotSymMetric.single_warped(eta, n - 2)
            ),
            floor=floor,
        )
        bend = None
    else:
        bend = bend_isotopy(
            eta, n, c, theta, L=spec.bend_flank,
            grid_counts=grid_counts, floor=floor,
        )
        cert = bend.certificate
    return BootIsotopySlice(
        u=float(u), theta=float(theta), l2_star=l2_star, spec=spec,
        certificate=cert, bend=bend, search=tuple(search),
    )


# ---------------------------------------------------------------------------
# Step metrics
# ---------------------------------------------------------------------------

def _stage_window(t_k, theta):
    """Deterministic bend window for a stage at t_k: (lo, hi, flank L)."""
    L = min(0.5 * math.pi, t_k / 6.0)
    width = 2.0 * L + theta
    return t_k - width, t_k, L


@dataclass(frozen=True)
class StepBase:
    """Torpedo-cylinder base of a step metric."""

    delta: float
    neck: float
    length: float
    n: int

    def __post_init__(self):
        if not (self.delta > 0.0 and self.neck > 0.0 and self.length > 0.0):
            raise InvalidMetricError("step base lengths must be positive")
        if self.n < 4:
            raise InvalidMetricError("step metrics need dimension n >= 4")

    @property
    def profile_domain(self):
        return self.delta * 0.5 * math.pi + self.neck

    def to_obj(self):
        return {
            "delta": self.delta,
            "neck": self.neck,
            "length": self.length,
            "n": self.n,
        }


@dataclass(frozen=True)
class StepSpec:
    """Nested bend stages (t_k, s_k), t_k strictly decreasing.

    Each stage's bend window must sit inside the product zone the
    previous stage leaves: t_{k+1} <= window_lo(k).
    """

    base: StepBase
    stages: Tuple[Tuple[float, float], ...]
    c: Optional[float] = None

    def __post_init__(self):
        c = self.c if self.c is not None else 2.1 * self.base.delta
        object.__setattr__(self, "c", float(c))
        if not self.c > 2.0 * self.base.delta:
            raise InvalidMetricError("step bend radius needs c > 2 delta")
        prev_lo = self.base.length
        for k, (t_k, s_k) in enumerate(self.stages):
            if not 0.0 < t_k < self.base.length:
                raise ConstructionError(
                    f"stage {k}: bend location {t_k:g} outside (0, length)"
                )
            if not 0.0 <= s_k <= 1.0:
                raise ConstructionError(
                    f"stage {k}: bend progress {s_k:g} outside [0, 1]"
                )
            if not t_k <= prev_lo:
                raise ConstructionError(
                    f"stage {k}: location {t_k:g} exceeds the product zone "
                    f"end {prev_lo:g} guaranteed by the previous stage"
                )
            lo, _, _ = _stage_window(t_k, s_k * 0.5 * math.pi)
            if not lo > 0.0:
                raise ConstructionError(
                    f"stage {k}: bend window extends past t = 0"
                )
            prev_lo = lo

    def to_obj(self):
        return {
            "base": self.base.to_obj(),
            "stages": [[t, s] for t, s in self.stages],
            "c": self.c,
        }


@dataclass(frozen=True)
class StepStage:
    """One resolved bend stage of a step metric."""

    index: int
    t_k: float
    s_k: float
    theta: float
    window_lo: float
    window_hi: float
    flank: float
    product_zone_end: float
    drop: float
    certificate: PositivityCertificate

    def to_obj(self):
        return {
            "index": self.index,
            "t_k": self.t_k,
            "s_k": self.s_k,
            "theta": self.theta,
            "window": [self.window_lo, self.window_hi],
            "product_zone_end": self.product_zone_end,
            "drop": self.drop,
            "certificate": self.certificate.to_obj(),
        }


@dataclass(frozen=True)
class StepMetric:
    """A certified step metric: staircase of partial bends."""

    spec: StepSpec
    eta: WarpFunction
    stages: Tuple[StepStage, ...]
    base_certificate: PositivityCertificate
    passed: bool

    def height(self, t):
        """Accumulated staircase drop at horizontal positions t."""
        tt = np.asarray(t, dtype=float)
        out = np.zeros_like(tt)
        for stage in self.stages:
            if stage.theta == 0.0:
                continue
            span = stage.window_hi - stage.window_lo
            tau = np.clip((tt - stage.window_lo) / span, 0.0, 1.0)
            ramp = WarpFunction(1.0, SmoothStep(0.0, 1.0)).eval(tau, 0)
            out += stage.drop * (1.0 - ramp)
        return out

    def height_rows(self, count=256):
        tt = np.linspace(0.0, self.spec.base.length, count)
        hh = self.height(tt)
        return np.column_stack([tt, hh])

    def to_obj(self):
        return {
            "spec": self.spec.to_obj(),
            "stages": [s.to_obj() for s in self.stages],
            "base_certificate": self.base_certificate.to_obj(),
            "passed": self.passed,
        }


def step_metric(spec, floor=POSITIVITY_FLOOR, grid_counts=(64, 17, 9)):
    """Resolve and certify a step metric stage by stage.

    Every stage runs a bend-family certificate at its own angle; the
    product-zone guarantee is re-verified before the next stage consumes
    it.  A failing stage raises with its index.
    """
    base = spec.base
    eta = perfect_torpedo(base.delta, base.profile_domain)
    alpha0 = float(alpha_ordinate(eta).eval(0.0, 0))
    base_cert = certify_positive(
        RotSymMetric.product_with_line(
            RotSymMetric.single_warped(eta, base.n - 2)
        ),
        floor=floor,
    )
    stages = []
    prev_lo = base.length
    for k, (t_k, s_k) in enumerate(spec.stages):
        theta = s_k * 0.5 * math.pi
        lo, hi, L = _stage_window(t_k, theta)
        if not t_k <= prev_lo:
            raise ConstructionError(
                f"stage {k}: product zone consumed (needs t <= {prev_lo:g})"
            )
        try:
            if theta > 0.0:
                sl = bend_isotopy(
                    eta, base.n, spec.c, theta, L=L,
                    grid_counts=grid_counts, floor=floor,
                )
                cert = sl.certificate
            else:
                cert = base_cert
        except NoCertificateError as exc:
            raise NoCertificateError(f"stage {k}: {exc}") from exc
        drop = (spec.c + alpha0) * math.sin(theta)
        stages.append(
            StepStage(
                index=k, t_k=float(t_k), s_k=float(s_k), theta=float(theta),
                window_lo=float(lo), window_hi=float(hi), flank=float(L),
                product_zone_end=float(lo), drop=float(drop), certificate=cert,
            )
        )
        prev_lo = lo
    passed = base_cert.passed and all(s.certificate.passed for s in stages)
    return StepMetric(
        spec=spec, eta=eta, stages=tuple(stages),
        base_certificate=base_cert, passed=bool(passed),
    )


@dataclass(frozen=True)
class StepRetract:
    """Unbending of a step metric back to the torpedo cylinder.

    ``target`` is the product over the full horizontal length with the
    base's delta and neck (the neck at the longer, unbent end).  The
    path unbends stages from the short end, one at a time; checkpoint
    rows record (v, passed) for the sampled intermediates.
    """

    target: StepBase
    path: Callable[[float], StepMetric]
    checkpoints: Tuple[Tuple[float, bool], ...]
    final_sup_difference: float

    def to_obj(self):
        return {
            "target": self.target.to_obj(),
            "checkpoints": [[v, p] for v, p in self.checkpoints],
            "final_sup_difference": self.final_sup_difference,
        }


def step_retract(spec, floor=POSITIVITY_FLOOR, samples_per_stage=2,
                 grid_counts=(64, 17, 9)):
    """Retract a step metric to its base cylinder, certifying the path.

    Accepts a StepSpec or a built StepMetric.  Stage k's progress is
    scaled down to zero before stage k-1 starts moving (deepest stage
    first); zero-stage inputs are fixed points.  The final profile is
    compared against the target cylinder's (zero staircase height) in
    sup norm; the target parameters are the base's, exactly.
    """
    if isinstance(spec, StepMetric):
        spec = spec.spec
    base = spec.base
    K = len(spec.stages)

    def scaled_spec(v):
        if K == 0:
            return spec
        factors = []
        for k in range(K):
            # stage K-1 unbends on v in [0, 1/K], stage 0 last
            start = (K - 1 - k) / K
            u = min(max((v - start) * K, 0.0), 1.0)
            factors.append(1.0 - u)
        stages = tuple(
            (t, s * factors[k]) for k, (t, s) in enumerate(spec.stages)
        )
        return StepSpec(base=base, stages=stages, c=spec.c)

    def path(v):
        if not 0.0 <= v <= 1.0:
            raise RangeError("retract parameter must lie in [0, 1]")
        return step_metric(scaled_spec(v), floor=floor, grid_counts=grid_counts)

    vv = np.linspace(0.0, 1.0, max(2, samples_per_stage * max(K, 1) + 1))
    checkpoints = []
    final = None
    for v in vv:
        sm = path(float(v))
        checkpoints.append((float(v), bool(sm.passed)))
        if v == vv[-1]:
            final = sm
    tt = np.linspace(0.0, base.length, 512)
    sup = float(np.max(np.abs(final.height(tt))))
    return StepRetract(
        target=base,
        path=path,
        checkpoints=tuple(checkpoints),
        final_sup_difference=sup,
    )
