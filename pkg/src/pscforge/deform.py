"""Certified deformations of rotationally symmetric psc metrics.

Four families of procedures, all returning concrete certified artifacts
rather than existence statements:

1. Concordance from isotopy.  A smooth path u -> f_u of warping profiles
   gives the cylinder metric dr^2 + f_{nu_lambda(t)}(r)^2 ds_q^2 + dt^2,
   where nu_lambda(t) = nu_1(t/lambda) is a cutoff that is 0 near t = 0
   and 1 near t = lambda.  Slowing the traversal (large lambda) shrinks
   the t-derivative contributions R_bar - R = O(|nu'|) + O(|nu'|^2) +
   O(|nu''|), so some finite lambda* certifies.  The certificate is
   computed by the finite-difference oracle on the two-variable chart,
   not by a hand-derived expansion.

2. Torpedo adjustments: neck extension (exact away from the glue
   window) and radius normalisation (a cutoff-blended linear homotopy
   that makes the profile agree with the unit torpedo on an initial
   window while keeping the boundary radius).

3. Stretching functions c(t) on [0, b+lam]: concave increasing
   reparameterisations with c(t) = t near 0 and an affine tail of small
   slope ending exactly at c(b+lam) = b.  Composition omega o c slows a
   profile down without losing membership in the standard class.

4. Standardisation: stretch by a searched Lambda*, then straight-line
   homotope to the torpedo of radius omega(b), certifying positivity on
   every slice and preserving the endpoint jet data throughout.

All searches follow the same discipline: double the scale until the
first certificate passes, then bisect (20 steps) toward a near-minimal
certified value.  When the very first candidate already certifies, the
concordance search returns it unchanged (there is no failing bracket to
bisect against); the standardisation search bisects down toward zero.
Randomised probe points are drawn from a seeded generator, so reports
are bitwise reproducible.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .curvature import (
    POSITIVITY_FLOOR,
    CurvatureFamily,
    GridSpec,
    PositivityCertificate,
    RotSymMetric,
    certify_positive,
    scalar_curvature_single,
)
from .errors import (
    ConstructionError,
    InvalidMetricError,
    NoCertificateError,
    RangeError,
)
from .oracle import concordance_chart, fd_scalar_curvature
from .torpedo import is_torpedo, perfect_torpedo
from .warp import (
    GRID_EPS,
    Affine,
    Antider,
    Compose,
    Const,
    Prod,
    SmoothStep,
    Sum,
    WarpFunction,
    check_W_membership,
    glue,
)

__all__ = [
    "ConcordanceResult",
    "HomotopyCertificate",
    "StretchFunction",
    "WarpIsotopy",
    "certify_homotopy",
    "concordance_curvature_gap",
    "concordance_from_isotopy",
    "cutoff",
    "neck_stretch",
    "radius_normalize",
    "standardize_to_torpedo",
    "stretch_audit",
    "stretch_warp",
    "stretching_function",
    "torpedo_radius_isotopy",
]

_LOG = logging.getLogger("pscforge.deform")

# The cutoff's master profile rises on the middle 90% of its domain, so
# every rescaled nu_lambda is exactly constant on [0, 0.05 lam] and
# [0.95 lam, lam]: the concordance is a genuine product near both ends.
_CUTOFF_FLAT = 0.05

# Endpoint jet data that the standardisation path must not move: value
# and slope at 0, even derivatives at 0 (smoothness of the disk metric
# at the centre), and the full horizontal jet at the far end.
_JET_TOL = 1e-8


def cutoff(lam):
    """Cutoff nu_lambda on [0, lam]: 0 near 0, 1 near lam, monotone.

    nu_lambda(t) = nu_1(t/lam), so all derivative bounds scale exactly:
    sup|nu_lambda^(k)| = sup|nu_1^(k)| / lam^k.  Doubling lam therefore
    halves the maximal first derivative and quarters the second.
    """
    if not lam > 0.0:
        raise ConstructionError("cutoff scale must be positive")
    rep = Compose(SmoothStep(_CUTOFF_FLAT, 1.0 - _CUTOFF_FLAT), Affine(0.0, 1.0 / lam))
    return WarpFunction(lam, rep)


@dataclass(frozen=True)
class WarpIsotopy:
    """A smooth one-parameter family u in [0, 1] of warping profiles.

    ``path(u)`` returns the profile f_u of the slice metric
    dr^2 + f_u^2 ds_q^2 on the disk of dimension fibre_dim = q+1.
    Construction samples u on a coarse grid and verifies that every
    sampled slice certifies positive scalar curvature, that all slices
    share one domain end, and that centred u-differences at steps 1/4
    and 1/8 agree (a Richardson consistency gate that rejects jumps and
    kinks in u; it is a sanity check, not a smoothness proof).
    """

    path: Callable[[float], WarpFunction]
    fibre_dim: int
    domain_end: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.fibre_dim < 2:
            raise InvalidMetricError("isotopy slices need fibre dimension >= 2")
        us = np.linspace(0.0, 1.0, 9)
        slices = [self.path(float(u)) for u in us]
        b = slices[0].domain_end
        for u, w in zip(us, slices):
            if abs(w.domain_end - b) > 1e-12 * max(1.0, abs(b)):
                raise InvalidMetricError(
                    "isotopy slices must share their domain end "
                    f"(slice at u={float(u):g} has {w.domain_end!r}, expected {b!r})"
                )
            cert = certify_positive(
                RotSymMetric.single_warped(w, self.fibre_dim - 1), npoints=384
            )
            if not cert.passed:
                raise InvalidMetricError(
                    f"isotopy slice at u={float(u):g} is not positively curved "
                    f"(min R = {cert.min_R:.3e})"
                )
        rr = np.linspace(1e-3 * b, b, 65)
        vals = np.stack([w.eval(rr, 0) for w in slices])
        fine = (vals[2:] - vals[:-2]) * (8.0 / 2.0)        # centred, step 1/8
        coarse = (vals[4:] - vals[:-4]) * (4.0 / 2.0)      # centred, step 1/4
        # For a C^3 path the two centred estimates differ by O(h^2); a
        # value jump of size J leaves a residue ~2J against a scale
        # ~1+4J, so this threshold rejects jumps above roughly a
        # quarter of the derivative scale.  A sanity gate, not a proof.
        dev = float(np.max(np.abs(fine[1:-1] - coarse)))
        scale = 1.0 + float(np.max(np.abs(fine)))
        if dev > 0.25 * scale:
            raise InvalidMetricError(
                "isotopy path fails the finite-difference smoothness gate "
                f"(centred-difference mismatch {dev:.3e} vs scale {scale:.3e})"
            )
        object.__setattr__(self, "domain_end", float(b))

    def slice_at(self, u):
        """The profile f_u; u must lie in [0, 1]."""
        if not 0.0 <= u <= 1.0:
            raise RangeError("isotopy parameter must lie in [0, 1]")
        return self.path(float(u))


def torpedo_radius_isotopy(delta_start, delta_end, b, fibre_dim=3):
    """Isotopy through torpedoes of linearly interpolated radius."""

    def path(u):
        return perfect_torpedo((1.0 - u) * delta_start + u * delta_end, b)

    return WarpIsotopy(path=path, fibre_dim=fibre_dim)


@dataclass(frozen=True)
class ConcordanceResult:
    """A certified concordance built from an isotopy.

    ``profile(r, t)`` is the two-variable warping chart of the metric
    dr^2 + profile(r, t)^2 ds_q^2 + dt^2 on [0, b] x [0, lambda_star];
    it is constant in t near both ends, so the metric is a genuine
    product there.  ``slice_margins`` lists (t, min R over the r grid)
    rows from the certified grid; ``search`` records every candidate
    scale with its pass flag and margin.
    """

    lambda_star: float
    profile: Callable[[np.ndarray, np.ndarray], np.ndarray]
    certificate: PositivityCertificate
    fibre_dim: int
    domain_end: float
    slice_margins: Tuple[Tuple[float, float], ...]
    search: Tuple[Tuple[float, bool, float], ...]

    def to_obj(self):
        return {
            "lambda_star": self.lambda_star,
            "fibre_dim": self.fibre_dim,
            "domain_end": self.domain_end,
            "certificate": self.certificate.to_obj(),
            "slice_margins": [[t, m] for t, m in self.slice_margins],
            "search": [[l, bool(p), m] for l, p, m in self.search],
        }


def _slice_lookup(iso, lam):
    """t -> warping profile f_{nu_lambda(t)}, cached per distinct t."""
    nu = cutoff(lam)
    cache = {}

    def slice_for(t):
        t = float(t)
        w = cache.get(t)
        if w is None:
            u = min(1.0, max(0.0, float(nu.eval(t, 0))))
            w = iso.path(u)
            cache[t] = w
        return w

    return slice_for


def _two_var_profile(iso, lam):
    slice_for = _slice_lookup(iso, lam)

    def profile(rr, tt):
        rr = np.asarray(rr, dtype=float)
        tt = np.asarray(tt, dtype=float)
        rr, tt = np.broadcast_arrays(rr, tt)
        out = np.empty(rr.shape)
        flat_r, flat_t, flat_o = rr.ravel(), tt.ravel(), out.reshape(-1)
        uniq, inverse = np.unique(flat_t, return_inverse=True)
        for i, tv in enumerate(uniq):
            mask = inverse == i
            flat_o[mask] = slice_for(tv).eval(flat_r[mask], 0)
        return out

    return profile, slice_for


def _concordance_grid(iso, lam, grid_counts, h_fd):
    """Chart, inset grid, and batched FD evaluator for one candidate lam."""
    b = iso.domain_end
    q = iso.fibre_dim - 1
    profile, slice_for = _two_var_profile(iso, lam)
    h = h_fd if h_fd is not None else min(1e-3 * max(b, 1.0), lam / 64.0)
    chart = concordance_chart(profile, q, r_box=(0.0, b), t_box=(0.0, lam))
    inset = 4.0 * h
    r_lo, r_hi = max(0.1 * b, inset), b - inset
    t_lo, t_hi = inset, lam - inset
    if not (r_hi > r_lo and t_hi > t_lo):
        raise ConstructionError("candidate scale too small for the FD stencil")
    spec = GridSpec(
        (("r", r_lo, r_hi, grid_counts[0]), ("t", t_lo, t_hi, grid_counts[1]))
    )
    mids = [0.5 * (lo + hi) for lo, hi in chart.box[1:1 + q]]

    def evaluate(r_flat, t_flat):
        r_flat = np.asarray(r_flat, dtype=float)
        cols = [r_flat]
        cols += [np.full_like(r_flat, m) for m in mids]
        cols.append(np.asarray(t_flat, dtype=float))
        return fd_scalar_curvature(chart, np.column_stack(cols), h=h)

    return profile, slice_for, spec, evaluate


def _concordance_certificate(iso, lam, floor, grid_counts, h_fd):
    profile, _, spec, evaluate = _concordance_grid(iso, lam, grid_counts, h_fd)
    meshes = spec.meshes()
    R = np.asarray(evaluate(meshes[0].ravel(), meshes[1].ravel()), dtype=float)
    cached = CurvatureFamily(spec, lambda *a: R)
    cert = certify_positive(cached, floor=floor)
    t_axis = spec.arrays()[1]
    margins = tuple(
        (float(t), float(m))
        for t, m in zip(t_axis, R.reshape(len(spec.arrays()[0]), -1).min(axis=0))
    )
    return profile, cert, margins


def _recheck_slices(iso, floor):
    """Precondition sweep: 11 slices must certify; returns their min R."""
    worst = math.inf
    for u in np.linspace(0.0, 1.0, 11):
        cert = certify_positive(
            RotSymMetric.single_warped(iso.path(float(u)), iso.fibre_dim - 1),
            npoints=512,
            floor=floor,
        )
        if not cert.passed:
            raise InvalidMetricError(
                f"isotopy slice at u={float(u):g} fails positivity "
                f"(min R = {cert.min_R:.3e})"
            )
        worst = min(worst, cert.min_R)
    return worst


def concordance_from_isotopy(iso, n, initial=1.0, floor=POSITIVITY_FLOOR,
                             grid_counts=(24, 24), h_fd=None,
                             max_doublings=20, bisection_steps=20):
    """Turn an isotopy of warping profiles into a certified concordance.

    ``n`` is the dimension of the cylinder metric, so n = fibre_dim + 1.
    The traversal scale starts at ``initial`` and doubles until the
    (r, t)-grid FD certificate passes, then 20 bisection steps tighten
    the bracket; if the first candidate already passes it is returned
    as lambda_star unchanged.  Monotonicity is spot-checked by also
    certifying 2 lambda_star.  Exhausting 2^20 * initial raises with
    the best margin seen.
    """
    if n != iso.fibre_dim + 1:
        raise InvalidMetricError(
            f"cylinder dimension n={n} must equal fibre_dim+1={iso.fibre_dim + 1}"
        )
    _recheck_slices(iso, floor)

    search = []

    def attempt(lam):
        profile, cert, margins = _concordance_certificate(
            iso, lam, floor, grid_counts, h_fd
        )
        search.append((float(lam), bool(cert.passed), float(cert.margin)))
        _LOG.debug("concordance candidate lam=%g margin=%.3e", lam, cert.margin)
        return profile, cert, margins

    lam = float(initial)
    profile, cert, margins = attempt(lam)
    if cert.passed:
        lam_star, star = lam, (profile, cert, margins)
    else:
        lo = lam
        star = None
        for _ in range(max_doublings):
            lam *= 2.0
            profile, cert, margins = attempt(lam)
            if cert.passed:
                hi, star = lam, (profile, cert, margins)
                break
            lo = lam
        if star is None:
            best = max(m for _, _, m in search)
            raise NoCertificateError(
                f"no certified traversal scale up to {initial * 2 ** max_doublings:g} "
                f"(best margin {best:.3e})"
            )
        for _ in range(bisection_steps):
            mid = 0.5 * (lo + hi)
            profile, cert, margins = attempt(mid)
            if cert.passed:
                hi, star = mid, (profile, cert, margins)
            else:
                lo = mid
        lam_star = hi

    _, cert2, _ = attempt(2.0 * lam_star)
    if not cert2.passed:
        raise NoCertificateError(
            f"certificate is not monotone: 2*lambda_star={2 * lam_star:g} fails "
            f"(margin {cert2.margin:.3e})"
        )
    profile, cert, margins = star
    return ConcordanceResult(
        lambda_star=float(lam_star),
        profile=profile,
        certificate=cert,
        fibre_dim=iso.fibre_dim,
        domain_end=iso.domain_end,
        slice_margins=margins,
        search=tuple(search),
    )


def concordance_certificate_at(iso, n, lam, floor=POSITIVITY_FLOOR,
                               grid_counts=(24, 24), h_fd=None):
    """Certify a single traversal scale without searching.

    Builds the traversal profile at the given ``lam`` and runs the same
    FD grid certificate the search uses.  Returns ``(profile, certificate,
    margins)`` where margins lists (t, min R over r) per grid row; the
    certificate's ``passed`` flag reports the outcome instead of raising.
    """
    if n != iso.fibre_dim + 1:
        raise InvalidMetricError(
            f"cylinder dimension n={n} must equal fibre_dim+1={iso.fibre_dim + 1}"
        )
    if lam <= 0.0:
        raise ConstructionError("traversal scale must be positive")
    return _concordance_certificate(iso, lam, floor, grid_counts, h_fd)


def concordance_curvature_gap(iso, n, lam, grid_counts=(16, 16), h_fd=None):
    """sup over the grid of |R_bar - R_slice| at traversal scale lam.

    R_bar is the FD scalar curvature of the two-variable cylinder chart;
    R_slice is the closed-form curvature of the frozen slice through the
    same point.  For w(r, t) = W(r, nu_lam(t)) the exact difference is
    -q(q-1) w_t^2 / w^2 - 2 q w_tt / w: there is no first-order t-term
    in this chart, so both contributions scale as 1/lam^2 and the gap
    shrinks by ~1/k^2 under lam -> k*lam.
    """
    if n != iso.fibre_dim + 1:
        raise InvalidMetricError(
            f"cylinder dimension n={n} must equal fibre_dim+1={iso.fibre_dim + 1}"
        )
    if h_fd is None:
        # Finer step than the certificate default: near the cap/neck glue
        # seam the mollifier's 4th derivative makes the h^2 FD error swamp
        # the true gap once lam is large.
        h_fd = min(2.5e-4 * max(iso.domain_end, 1.0), lam / 64.0)
    _, slice_for, spec, evaluate = _concordance_grid(iso, lam, grid_counts, h_fd)
    meshes = spec.meshes()
    r_flat, t_flat = meshes[0].ravel(), meshes[1].ravel()
    R_bar = np.asarray(evaluate(r_flat, t_flat), dtype=float)
    R_slice = np.empty_like(R_bar)
    for tv in np.unique(t_flat):
        mask = t_flat == tv
        R_slice[mask] = scalar_curvature_single(
            slice_for(tv), iso.fibre_dim, r_flat[mask]
        )
    return float(np.max(np.abs(R_bar - R_slice)))


def neck_stretch(eta, extra, u, fibre_dim=3):
    """Extend a torpedo's neck by u * extra, leaving the cap bit-exact.

    The profile's cylindrical run is replaced (inside the neck only) by
    the exact constant delta and the domain grows by u * extra; the two
    branches agree on the neck up to the torpedo tolerance, so the glue
    is cosmetic.  The endpoint jet stays (delta, 0, ..., 0) and the new
    neck carries the cylinder curvature q(q-1)/delta^2 identically.
    """
    if not extra > 0.0:
        raise ConstructionError("neck extension distance must be positive")
    if not 0.0 <= u <= 1.0:
        raise RangeError("extension parameter must lie in [0, 1]")
    report = is_torpedo(eta, fibre_dim)
    if not report.passed:
        failed = [k for k, ok in report.checks.items() if not ok]
        raise InvalidMetricError(f"neck_stretch needs a torpedo profile ({failed})")
    if u == 0.0:
        return eta
    b = eta.domain_end
    delta = report.details["delta"]
    neck0 = report.details["neck_start"]
    if not neck0 < b - 1e-9 * max(1.0, b):
        raise ConstructionError("torpedo has no neck room to glue an extension into")
    out = WarpFunction(
        b + u * extra,
        glue(eta.rep, Const(delta), 0.5 * (neck0 + b), 0.8 * (b - neck0)),
    )
    post = is_torpedo(out, fibre_dim, npoints=512)
    if not post.passed:
        failed = [k for k, ok in post.checks.items() if not ok]
        raise NoCertificateError(f"extended profile lost torpedo form ({failed})")
    return out


# The unit torpedo's mollified cap is flat past 1.12 * pi/2 for the
# default smoothing window; the normalisation blend must only act where
# both profiles are already constant, hence this clearance.
_UNIT_CAP_CLEAR = 1.12 * (math.pi / 2.0)


def radius_normalize(eta, u, fibre_dim=3, floor=POSITIVITY_FLOOR):
    """Blend a torpedo of radius delta toward unit radius near the tip.

    At stage u the profile is eta_delta + u * mu * (eta_1 - eta_delta)
    with mu a cutoff that is 1 on an initial window and 0 near the end:
    at u = 1 the output IS the unit torpedo on [0, m_lo] and IS the
    input radius near the far end, so the boundary jet (delta, 0, ...)
    never moves.  The transition is dragged out over a length chosen so
    the blended first and second derivatives stay small; if the input
    domain is too short it is first extended by neck_stretch (logged).
    Each returned stage is certified positive for the given fibre
    dimension (default 3, the weakest case once slopes stay below 1);
    failures double the transition length, and exhaustion raises.
    """
    if not 0.0 <= u <= 1.0:
        raise RangeError("normalisation parameter must lie in [0, 1]")
    report = is_torpedo(eta, fibre_dim)
    if not report.passed:
        failed = [k for k, ok in report.checks.items() if not ok]
        raise InvalidMetricError(f"radius_normalize needs a torpedo profile ({failed})")
    delta = report.details["delta"]
    if abs(delta - 1.0) <= 1e-12:
        return eta
    b = eta.domain_end
    scale = max(1.0, delta)
    m_lo = _UNIT_CAP_CLEAR * scale
    length = max(2.0 * scale, math.sqrt(32.0 * abs(1.0 - delta) / min(1.0, delta)))
    cert = None
    for _ in range(5):
        m_hi = m_lo + length
        b_req = m_hi + 0.4 * scale
        if b >= b_req:
            base = eta
        else:
            base = neck_stretch(eta, b_req - b, 1.0, fibre_dim)
            _LOG.info(
                "radius_normalize extended the domain %.6g -> %.6g for the slow blend",
                b, base.domain_end,
            )
        unit = perfect_torpedo(1.0, base.domain_end)
        mu = Sum((Const(1.0), SmoothStep(m_lo, m_hi)), (1.0, -1.0))
        diff = Sum((unit.rep, base.rep), (1.0, -1.0))
        out = WarpFunction(
            base.domain_end, Sum((base.rep, Prod((mu, diff))), (1.0, float(u)))
        )
        cert = certify_positive(
            RotSymMetric.single_warped(out, fibre_dim - 1), npoints=768, floor=floor
        )
        if cert.passed:
            return out
        length *= 2.0
    raise NoCertificateError(
        f"radius normalisation failed after extending the blend window "
        f"(min R = {cert.min_R:.3e} at r = {cert.argmin['r']:.6g})"
    )


@dataclass(frozen=True)
class StretchFunction:
    """Concave reparameterisation c: [0, b+lam] -> [0, b].

    c(t) = t on [0, identity_end]; c' > 0 and c'' <= 0 everywhere; from
    t_d on, c is affine with slope ``tail_slope`` and ends exactly at
    c(b+lam) = b.  The corner data t_d = 0.8 r_d and identity_end =
    0.1 r_d depend on r_d only, never on lam, and c(t_d) <= t_d < r_d.

    The tail is affine but does not pass through the origin: a concave
    function that is the identity near 0 always sits strictly above the
    chord b*t/(b+lam), so the exact proportional tail is unattainable;
    what the construction preserves instead is the endpoint c(b+lam)=b
    (exactly, by solving for the slope) and tail_slope < b/(b+lam),
    which vanishes as lam grows.
    """

    r_d: float
    lam: float
    b: float
    t_d: float
    fn: WarpFunction
    tail_slope: float
    identity_end: float

    def __call__(self, t, order=0):
        return self.fn.eval(t, order)


def stretching_function(r_d, lam, b, npoints=512):
    """Build and numerically validate the stretch c_{r_d, lam}.

    The slope profile is 1 - (1-M) S(t) with S a symmetric smooth step
    rising on [0.1 r_d, 0.8 r_d]; the ramp's mean is exactly 1/2, so
    requiring c(b+lam) = b solves M = 1 - lam / (b + lam - 0.45 r_d) in
    closed form.  lam = 0 gives the exact identity on [0, b].
    """
    if not 0.0 < r_d < b:
        raise ConstructionError("stretch corner needs 0 < r_d < b")
    if lam < 0.0:
        raise ConstructionError("stretch distance must be non-negative")
    t_d, a0 = 0.8 * r_d, 0.1 * r_d
    if not t_d - a0 > 1e-12 * max(1.0, b):
        raise ConstructionError("identity-to-tail window collapsed")
    if lam == 0.0:
        fn = WarpFunction(b, Affine(0.0, 1.0))
        return StretchFunction(float(r_d), 0.0, float(b), t_d, fn, 1.0, a0)
    ramp_mass = b + lam - 0.5 * (t_d + a0)
    M = 1.0 - lam / ramp_mass
    slope = Sum((Const(1.0), SmoothStep(a0, t_d)), (1.0, -(1.0 - M)))
    fn = WarpFunction(b + lam, Antider(slope, 0.0, 0.0))
    grid = np.linspace(0.0, b + lam, npoints)
    C = fn.coeffs(grid, 2)
    if float(np.min(C[1])) < M - 1e-10:
        raise ConstructionError("stretch lost monotonicity")
    if float(np.max(2.0 * C[2])) > 1e-10:
        raise ConstructionError("stretch lost concavity")
    c_td = float(fn.eval(t_d, 0))
    if not c_td < r_d:
        raise ConstructionError("stretch corner escaped the concavity window")
    end_err = abs(float(fn.eval(b + lam, 0)) - b)
    if end_err > 1e-9 * max(1.0, b):
        raise ConstructionError(f"stretch endpoint off by {end_err:.3e}")
    return StretchFunction(float(r_d), float(lam), float(b), t_d, fn, M, a0)


def stretch_audit(omega, r_d, lam, q, npoints=512):
    """Grid audit of the curvature lower bound for omega o c.

    Exact identity: R_comp(t) = c'^2 [-2q w''/w + q(q-1)(1-w'^2)/w^2]
    - 2q c'' w'/w + q(q-1)(1-c'^2)/w^2, all of w evaluated at c(t).  The
    audit checks pointwise that the bracket term times c'^2 plus the
    -2q c'' w'/w term is a true lower bound (gap = last term >= 0) and
    that the second term is itself nonnegative (c'' <= 0, w' >= 0).
    """
    b = omega.domain_end
    c = stretching_function(r_d, lam, b)
    total = b + lam
    out = WarpFunction(total, Compose(omega.rep, c.fn.rep))
    tt = np.linspace(GRID_EPS * total, total, npoints)
    R_comp = scalar_curvature_single(out, q + 1, tt)
    Cj = c.fn.coeffs(tt, 2)
    cv, cd, cdd = Cj[0], Cj[1], 2.0 * Cj[2]
    cv = np.clip(cv, GRID_EPS * b, b)
    Wj = omega.coeffs(cv, 2)
    w0, w1 = Wj[0], Wj[1]
    bracket = scalar_curvature_single(omega, q + 1, cv)
    second = -2.0 * q * cdd * w1 / w0
    bound = cd**2 * bracket + second
    tail = tt >= c.t_d
    return {
        "min_gap": float(np.min(R_comp - bound)),
        "min_second_term": float(np.min(second)),
        "min_bound": float(np.min(bound)),
        "min_R": float(np.min(R_comp)),
        "tail_slope_sup": float(np.max(np.abs(cd[tail] * w1[tail]))) if tail.any() else 0.0,
        "max_cdot": float(np.max(cd)),
    }


def stretch_warp(omega, r_d, lam, q, npoints=1024, floor=POSITIVITY_FLOOR):
    """Slow a standard profile down: omega o c_{r_d, lam} on [0, b+lam].

    Requires membership of omega in the standard class with detected
    initial concavity reaching r_d.  The output is membership-checked on
    the stretched domain and the lower-bound audit must hold pointwise
    (its slack is q(q-1)(1-c'^2)/w^2 >= 0, and the mixed term
    -2q c'' w'/w is nonnegative because c'' <= 0 and w' >= 0).
    """
    report = check_W_membership(omega, q + 1, npoints=npoints)
    if not report.passed:
        failed = [k for k, ok in report.checks.items() if not ok]
        raise InvalidMetricError(f"stretch_warp needs standard-class membership ({failed})")
    if report.details["r_d"] + 1e-12 < r_d:
        raise InvalidMetricError(
            f"detected concavity window ends at {report.details['r_d']:.6g}, "
            f"short of the requested corner r_d={r_d:.6g}"
        )
    if lam == 0.0:
        return omega
    b = omega.domain_end
    c = stretching_function(r_d, lam, b)
    out = WarpFunction(b + lam, Compose(omega.rep, c.fn.rep))
    audit = stretch_audit(omega, r_d, lam, q, npoints=min(npoints, 512))
    if audit["min_second_term"] < -1e-12 or audit["min_gap"] < -1e-9:
        raise NoCertificateError(
            f"stretch audit violated (gap {audit['min_gap']:.3e}, "
            f"mixed term {audit['min_second_term']:.3e})"
        )
    post = check_W_membership(out, q + 1, npoints=npoints)
    if not post.passed:
        failed = [k for k, ok in post.checks.items() if not ok]
        raise NoCertificateError(f"stretched profile left the standard class ({failed})")
    return out


@dataclass(frozen=True)
class HomotopyCertificate:
    """Per-slice positivity record for a straight-line homotopy.

    ``margins`` holds (s, min R - floor) rows; ``worst`` is the full
    grid certificate of the weakest slice (at parameter ``worst_s``).
    ``jet_deviation`` is the largest movement of the pinned endpoint
    data over all slices: value/slope/even derivatives at 0 and the
    full horizontal jet at the far end.
    """

    s_values: Tuple[float, ...]
    margins: Tuple[Tuple[float, float], ...]
    worst: PositivityCertificate
    worst_s: float
    jet_deviation: float
    floor: float
    passed: bool

    def to_obj(self):
        return {
            "passed": bool(self.passed),
            "floor": self.floor,
            "worst_s": self.worst_s,
            "jet_deviation": self.jet_deviation,
            "worst": self.worst.to_obj(),
            "margins": [[s, m] for s, m in self.margins],
        }


def _endpoint_jet_deviation(w, delta):
    j0 = w.jet_at(0.0).entries
    jb = w.jet_at(w.domain_end).entries
    dev = max(abs(j0[0]), abs(j0[1] - 1.0))
    dev = max(dev, max(abs(j0[k]) for k in range(2, len(j0), 2)))
    dev = max(dev, abs(jb[0] - delta), max(abs(x) for x in jb[1:]))
    return dev


def _certify_slices(stretched, eta, q, s_values, floor, npoints):
    delta = float(eta.eval(eta.domain_end, 0))
    margins = []
    worst = None
    worst_s = 0.0
    jet_dev = 0.0
    all_pass = True
    for s in s_values:
        w = WarpFunction(
            stretched.domain_end,
            Sum((stretched.rep, eta.rep), (1.0 - float(s), float(s))),
        )
        cert = certify_positive(
            RotSymMetric.single_warped(w, q), npoints=npoints, floor=floor
        )
        margins.append((float(s), float(cert.margin)))
        jet_dev = max(jet_dev, _endpoint_jet_deviation(w, delta))
        all_pass = all_pass and cert.passed
        if worst is None or cert.margin < worst.margin:
            worst, worst_s = cert, float(s)
    return HomotopyCertificate(
        s_values=tuple(float(s) for s in s_values),
        margins=tuple(margins),
        worst=worst,
        worst_s=worst_s,
        jet_deviation=float(jet_dev),
        floor=floor,
        passed=bool(all_pass and jet_dev <= _JET_TOL),
    )


def _homotopy_s_grid(seed, s_count=21, random_count=10):
    rng = np.random.default_rng(seed)
    return np.unique(
        np.concatenate([np.linspace(0.0, 1.0, s_count), rng.uniform(0.0, 1.0, random_count)])
    )


def certify_homotopy(omega, q, lam, s_values=None, seed=0,
                     floor=POSITIVITY_FLOOR, npoints=512, r_d=None):
    """Certify the straight line from the lam-stretched omega to its torpedo.

    The target is the torpedo of radius omega(b) on [0, b+lam]; slices
    are (1-s) (omega o c) + s eta.  With lam = 0 this is the naive
    homotopy, which can lose positivity for steep profiles; the
    certificate reports exactly where.
    """
    report = check_W_membership(omega, q + 1)
    if not report.passed:
        failed = [k for k, ok in report.checks.items() if not ok]
        raise InvalidMetricError(f"homotopy needs standard-class membership ({failed})")
    b = omega.domain_end
    delta = float(omega.eval(b, 0))
    rd = r_d if r_d is not None else report.details["r_d"]
    stretched = stretch_warp(omega, rd, lam, q) if lam > 0.0 else omega
    eta = perfect_torpedo(delta, b + lam)
    if s_values is None:
        s_values = _homotopy_s_grid(seed)
    return _certify_slices(stretched, eta, q, s_values, floor, npoints)


def standardize_to_torpedo(omega, q, initial=None, seed=0, floor=POSITIVITY_FLOOR,
                           npoints=512, max_doublings=20, bisection_steps=20):
    """Deform a standard profile to the torpedo of radius omega(b).

    Returns (Lambda_star, path, certificate).  The path runs the
    stretch stage on u in [0, 1/2] (scale 2u Lambda_star) and the
    straight-line homotopy on u in [1/2, 1]; every homotopy slice is
    certified positive on a grid and the endpoint jet data never moves
    (the far jet is (omega(b), 0, ..., 0) at every stage, so the target
    radius equals omega(b) identically).  If omega is already a torpedo
    the straight line to the reference torpedo stays inside the torpedo
    class and Lambda_star = 0.  The scale search doubles from
    ``initial`` (default max(1, b)) until the full slice set certifies,
    then bisects; exhaustion raises with the weakest slice diagnostics.
    """
    report = check_W_membership(omega, q + 1)
    if not report.passed:
        failed = [k for k, ok in report.checks.items() if not ok]
        raise InvalidMetricError(f"standardisation needs standard-class membership ({failed})")
    b = omega.domain_end
    delta = float(omega.eval(b, 0))
    rd = report.details["r_d"]
    s_values = _homotopy_s_grid(seed)

    if is_torpedo(omega, q + 1).passed:
        eta = perfect_torpedo(delta, b)
        cert = _certify_slices(omega, eta, q, s_values, floor, npoints)

        def path(u):
            if not 0.0 <= u <= 1.0:
                raise RangeError("path parameter must lie in [0, 1]")
            return WarpFunction(b, Sum((omega.rep, eta.rep), (1.0 - u, u)))

        return 0.0, path, cert

    history = []

    def attempt(lam):
        try:
            cert = certify_homotopy(
                omega, q, lam, s_values=s_values, floor=floor, npoints=npoints, r_d=rd
            )
        except ConstructionError:
            cert = None
        history.append((float(lam), cert))
        if cert is not None:
            _LOG.debug(
                "standardize candidate lam=%g worst margin=%.3e", lam, cert.worst.margin
            )
        return cert

    lam = float(initial) if initial is not None else max(1.0, b)
    cert = attempt(lam)
    if cert is not None and cert.passed:
        naive = attempt(0.0)
        if naive is not None and naive.passed:
            eta = perfect_torpedo(delta, b)

            def path(u):
                if not 0.0 <= u <= 1.0:
                    raise RangeError("path parameter must lie in [0, 1]")
                s = max(0.0, 2.0 * u - 1.0)
                return WarpFunction(b, Sum((omega.rep, eta.rep), (1.0 - s, s)))

            return 0.0, path, naive
        lo, hi, star = 0.0, lam, cert
    else:
        lo, hi, star = lam, None, None
        for _ in range(max_doublings):
            lam *= 2.0
            cert = attempt(lam)
            if cert is not None and cert.passed:
                hi, star = lam, cert
                break
            lo = lam
        if star is None:
            scored = [(l, c) for l, c in history if c is not None]
            if scored:
                best_l, best_c = max(scored, key=lambda lc: lc[1].worst.min_R)
                detail = (
                    f"best min R {best_c.worst.min_R:.3e} at lam={best_l:g}, "
                    f"s={best_c.worst_s:g}, r={best_c.worst.argmin['r']:.6g}"
                )
            else:
                detail = "no candidate admitted a torpedo target"
            raise NoCertificateError(f"standardisation search exhausted ({detail})")
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        cert = attempt(mid)
        if cert is not None and cert.passed:
            hi, star = mid, cert
        else:
            lo = mid
    lam_star = hi
    stretched = stretch_warp(omega, rd, lam_star, q) if lam_star > 0.0 else omega
    eta = perfect_torpedo(delta, b + lam_star)

    def path(u):
        if not 0.0 <= u <= 1.0:
            raise RangeError("path parameter must lie in [0, 1]")
        if u <= 0.5:
            lam_u = lam_star * (2.0 * u)
            if lam_u == 0.0:
                return omega
            c = stretching_function(rd, lam_u, b)
            return WarpFunction(b + lam_u, Compose(omega.rep, c.fn.rep))
        s = 2.0 * u - 1.0
        return WarpFunction(
            b + lam_star, Sum((stretched.rep, eta.rep), (1.0 - s, s))
        )

    return float(lam_star), path, star
