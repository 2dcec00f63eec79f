"""Finite-difference curvature engine for chart-level metric tensors.

This module is the numerical authority the closed forms are checked
against.  It knows nothing about warped products: a metric is just a
callable returning the matrix G(x) on a coordinate box, and every
curvature quantity is assembled from central finite differences of G.

Christoffel symbols come from the textbook formula

    Gamma^k_ij = 1/2 G^{kl} (d_j G_il + d_i G_jl - d_l G_ij),

with all partials second-order central (step h) and the G^{kl}
contraction done by a dense linear solve rather than explicit
inversion.  Curvature needs derivatives of Gamma; differencing a
difference loses accuracy to subtractive cancellation, so the outer
stencil is widened to step 2h:

    d_a Gamma(x) ~ (Gamma(x + 2h e_a) - Gamma(x - 2h e_a)) / (4h).

The error model stays O(h^2) with a constant proportional to fourth
derivatives of G.  From d Gamma and Gamma we build

    R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik
              + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik,

then Ric_kj = R^i_kij and R = trace(G^{-1} Ric).  Sectional curvature
of a coordinate plane uses the general denominator

    K_ij = g(R(e_i, e_j) e_j, e_i) / (g_ii g_jj - g_ij^2),

valid in any chart.  A simplified variant without the denominator
(exact only at points where the chart is normal) is kept behind a flag
for testing against synthetically normalized charts.

Everything is batched: a request for N points assembles the full
stencil (about (2 dim + 1)^2 N metric evaluations for curvature) into
a single call of the metric function, so chart functions built on
numpy vectorize end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import DegeneratePlaneError, InvalidMetricError, RangeError

__all__ = [
    "ChartMetric",
    "CrossCheckReport",
    "euclidean_chart",
    "chart_from_rotsym",
    "concordance_chart",
    "stereographic_sphere_chart",
    "fd_christoffels",
    "fd_sectional",
    "fd_scalar_curvature",
    "cross_check",
]


# --------------------------------------------------------------------------
# chart-level metrics


@dataclass(frozen=True)
class ChartMetric:
    """A metric tensor presented in a single coordinate chart.

    ``matrix_fn`` maps an (N, dim) array of points to an (N, dim, dim)
    array of metric matrices.  The result is symmetrized on read, so
    g_ij = g_ji holds exactly by construction.  ``box`` gives the
    per-axis closed ranges on which the chart is valid; stencil points
    must stay inside it.
    """

    dim: int
    matrix_fn: Callable[[np.ndarray], np.ndarray]
    box: Tuple[Tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidMetricError("chart dimension must be >= 2")
        if len(self.box) != self.dim:
            raise InvalidMetricError("box must list one (lo, hi) range per axis")
        for lo, hi in self.box:
            if not hi > lo:
                raise InvalidMetricError("each box range needs hi > lo")

    def matrix(self, points: np.ndarray) -> np.ndarray:
        """Symmetrized metric matrices at an (N, dim) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            raise InvalidMetricError(
                "points have %d coordinates, chart has dimension %d"
                % (pts.shape[-1], self.dim)
            )
        raw = np.asarray(self.matrix_fn(pts), dtype=float)
        if raw.shape != (pts.shape[0], self.dim, self.dim):
            raise InvalidMetricError("matrix_fn returned a misshaped array")
        return 0.5 * (raw + np.swapaxes(raw, -1, -2))

    def component(self, point: Sequence[float], i: int, j: int) -> float:
        """Single component g_ij at one point."""
        return float(self.matrix(np.asarray(point, dtype=float)[None, :])[0, i, j])

    def check_positive_definite(self, points: np.ndarray) -> bool:
        """Spot-check positive-definiteness via leading principal minors."""
        mats = self.matrix(points)
        for k in range(1, self.dim + 1):
            minors = np.linalg.det(mats[:, :k, :k])
            if np.any(minors <= 0.0):
                return False
        return True

    def require_interior(self, points: np.ndarray, margin: float) -> None:
        """Raise RangeError unless every point sits margin-deep in the box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        for axis, (lo, hi) in enumerate(self.box):
            x = pts[:, axis]
            if np.any(x < lo + margin) or np.any(x > hi - margin):
                raise RangeError(
                    "axis %d: stencil of half-width %g leaves the chart box "
                    "[%g, %g]" % (axis, margin, lo, hi)
                )

    def default_step(self) -> float:
        """Default FD step: 1e-3 times the smallest axis extent."""
        return 1e-3 * min(hi - lo for lo, hi in self.box)


def euclidean_chart(dim: int, extent: float = 1.0) -> ChartMetric:
    """Flat metric on [0, extent]^dim in Cartesian coordinates."""

    def mat(pts):
        n = pts.shape[0]
        return np.broadcast_to(np.eye(dim), (n, dim, dim)).copy()

    return ChartMetric(dim, mat, tuple((0.0, float(extent)) for _ in range(dim)),
                       name="euclidean")


def _sphere_block(angles: np.ndarray) -> np.ndarray:
    """Diagonal of the round metric on S^q in nested spherical angles.

    Coordinates (p_1, ..., p_q) with ds^2 = dp_1^2 + sin^2(p_1) dp_2^2
    + sin^2(p_1) sin^2(p_2) dp_3^2 + ...; returns the (N, q) diagonal.
    """
    n, q = angles.shape
    diag = np.ones((n, q))
    run = np.ones(n)
    for k in range(1, q):
        run = run * np.sin(angles[:, k - 1]) ** 2
        diag[:, k] = run
    return diag


# Centered at pi/2 where sin is near 1: the nested-sphere Christoffels
# are cot-type, so FD truncation constants grow like sin(phi)^-5 toward
# the poles.  This box keeps them at unit scale.
_ANGLE_BOX = (math.pi / 2 - 0.45, math.pi / 2 + 0.45)


def chart_from_rotsym(metric, angle_box: Tuple[float, float] = _ANGLE_BOX,
                      line_box: Tuple[float, float] = (0.0, 1.0),
                      r_box: Optional[Tuple[float, float]] = None) -> ChartMetric:
    """Coordinate chart for a rotationally symmetric metric.

    Single warped products get coordinates (r, p_1, ..., p_q) with
    matrix diag(1, beta^2 s_1, ..., beta^2 s_q) where s_k are the
    nested sphere factors; doubly warped products append the line
    coordinate l with weight psi^2; a product with a line appends a
    unit axis.  The default angle box stays away from the poles of the
    spherical coordinates, where the chart degenerates.
    """
    from .curvature import RotSymMetric

    if not isinstance(metric, RotSymMetric):
        raise InvalidMetricError("chart_from_rotsym expects a RotSymMetric")

    if metric.kind == "product_with_line":
        inner_chart = chart_from_rotsym(metric.inner, angle_box, line_box, r_box)
        dim = inner_chart.dim + 1

        def mat(pts, _inner=inner_chart):
            n = pts.shape[0]
            out = np.zeros((n, dim, dim))
            out[:, :-1, :-1] = _inner.matrix(pts[:, :-1])
            out[:, -1, -1] = 1.0
            return out

        return ChartMetric(dim, mat, inner_chart.box + (line_box,),
                           name=inner_chart.name + " x line")

    q = metric.sphere_dim
    if metric.kind == "single_warped":
        beta = metric.beta
        if r_box is None:
            r_box = (0.05 * beta.domain_end, 0.95 * beta.domain_end)
        dim = 1 + q

        def mat(pts, _beta=beta):
            n = pts.shape[0]
            out = np.zeros((n, dim, dim))
            out[:, 0, 0] = 1.0
            b = _beta.eval(pts[:, 0])
            diag = _sphere_block(pts[:, 1:]) * (b ** 2)[:, None]
            for k in range(q):
                out[:, 1 + k, 1 + k] = diag[:, k]
            return out

        box = (r_box,) + tuple(angle_box for _ in range(q))
        return ChartMetric(dim, mat, box, name="single_warped")

    if metric.kind == "doubly_warped":
        phi, psi = metric.phi, metric.psi
        if r_box is None:
            r_box = (0.05 * phi.domain_end, 0.95 * phi.domain_end)
        dim = 1 + q + 1

        def mat(pts, _phi=phi, _psi=psi):
            n = pts.shape[0]
            out = np.zeros((n, dim, dim))
            out[:, 0, 0] = 1.0
            p = _phi.eval(pts[:, 0])
            diag = _sphere_block(pts[:, 1:1 + q]) * (p ** 2)[:, None]
            for k in range(q):
                out[:, 1 + k, 1 + k] = diag[:, k]
            out[:, -1, -1] = _psi.eval(pts[:, 0]) ** 2
            return out

        box = (r_box,) + tuple(angle_box for _ in range(q)) + (line_box,)
        return ChartMetric(dim, mat, box, name="doubly_warped")

    raise InvalidMetricError("unknown metric kind %r" % (metric.kind,))


def concordance_chart(profile: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      sphere_dim: int,
                      r_box: Tuple[float, float],
                      t_box: Tuple[float, float],
                      angle_box: Tuple[float, float] = _ANGLE_BOX) -> ChartMetric:
    """Chart dr^2 + f(r, t)^2 ds_q^2 + dt^2 for a two-variable profile.

    ``profile`` must broadcast over numpy arrays of (r, t) pairs.  This
    is the chart the deformation searches certify on: the slice metrics
    are warped products, the t direction is the deformation parameter,
    and nothing about the slice structure is assumed by the engine.
    """
    if sphere_dim < 1:
        raise InvalidMetricError("sphere_dim must be >= 1")
    q = sphere_dim
    dim = 1 + q + 1

    def mat(pts):
        n = pts.shape[0]
        out = np.zeros((n, dim, dim))
        out[:, 0, 0] = 1.0
        f = np.asarray(profile(pts[:, 0], pts[:, -1]), dtype=float)
        diag = _sphere_block(pts[:, 1:1 + q]) * (f ** 2)[:, None]
        for k in range(q):
            out[:, 1 + k, 1 + k] = diag[:, k]
        out[:, -1, -1] = 1.0
        return out

    box = (r_box,) + tuple(angle_box for _ in range(q)) + (t_box,)
    return ChartMetric(dim, mat, box, name="concordance")


def stereographic_sphere_chart(radius: float, dim: int,
                               extent: float = 0.5) -> ChartMetric:
    """Round sphere of the given radius in a stereographic chart.

    g_ij = (2 rho^2 / (rho^2 + |x|^2))^2 delta_ij on a box away from
    the projection point; used for coordinate-independence checks.
    """
    rho2 = float(radius) ** 2

    def mat(pts):
        n = pts.shape[0]
        conf = (2.0 * rho2 / (rho2 + np.sum(pts ** 2, axis=1))) ** 2
        out = np.zeros((n, dim, dim))
        for i in range(dim):
            out[:, i, i] = conf
        return out

    return ChartMetric(dim, mat, tuple((0.1, 0.1 + extent) for _ in range(dim)),
                       name="stereographic")


# --------------------------------------------------------------------------
# batched finite-difference internals


def _christoffels_batch(metric: ChartMetric, pts: np.ndarray,
                        h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Metric matrices and Christoffel symbols at a batch of points.

    Returns (G, Gamma) with G of shape (N, d, d) and Gamma of shape
    (N, d, d, d) indexed Gamma[n, k, i, j] = Gamma^k_ij.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n, d = pts.shape
    offsets = np.zeros((2 * d, d))
    for a in range(d):
        offsets[2 * a, a] = h
        offsets[2 * a + 1, a] = -h
    stencil = (pts[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    G = metric.matrix(pts)
    vals = metric.matrix(stencil).reshape(n, 2 * d, d, d)
    # dG[n, a, i, j] = d_a G_ij
    dG = (vals[:, 0::2] - vals[:, 1::2]) / (2.0 * h)
    # T[n, l, i, j] = 1/2 (d_j G_il + d_i G_jl - d_l G_ij)
    term_j = np.transpose(dG, (0, 3, 2, 1))
    term_i = np.transpose(dG, (0, 3, 1, 2))
    T = 0.5 * (term_j + term_i - dG)
    try:
        gamma = np.linalg.solve(G, T.reshape(n, d, d * d)).reshape(n, d, d, d)
    except np.linalg.LinAlgError as exc:
        raise InvalidMetricError("metric matrix is singular on the stencil") from exc
    return G, gamma


def _riemann_batch(metric: ChartMetric, pts: np.ndarray, h: float):
    """G, Gamma, dGamma and the (1,3) curvature tensor at a batch.

    The outer derivative of Gamma uses step 2h; the returned tensor is
    indexed R[n, l, k, i, j] = R^l_kij (the l-component of
    R(e_i, e_j) e_k).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n, d = pts.shape
    G, gamma = _christoffels_batch(metric, pts, h)
    offsets = np.zeros((2 * d, d))
    for a in range(d):
        offsets[2 * a, a] = 2.0 * h
        offsets[2 * a + 1, a] = -2.0 * h
    stencil = (pts[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    _, gam_s = _christoffels_batch(metric, stencil, h)
    gam_s = gam_s.reshape(n, 2 * d, d, d, d)
    # dgam[n, a, k, i, j] = d_a Gamma^k_ij
    dgam = (gam_s[:, 0::2] - gam_s[:, 1::2]) / (4.0 * h)
    # A[n, l, k, i, j] = d_i Gamma^l_jk
    A = np.transpose(dgam, (0, 2, 4, 1, 3))
    B = np.swapaxes(A, 3, 4)
    quad1 = np.einsum("nlim,nmjk->nlkij", gamma, gamma)
    quad2 = np.einsum("nljm,nmik->nlkij", gamma, gamma)
    riem = A - B + quad1 - quad2
    return G, gamma, dgam, riem


def _scalar_batch(metric: ChartMetric, pts: np.ndarray, h: float) -> np.ndarray:
    G, _, _, riem = _riemann_batch(metric, pts, h)
    ric = np.einsum("nikij->nkj", riem)
    traced = np.linalg.solve(G, ric)
    return np.einsum("nii->n", traced)


# --------------------------------------------------------------------------
# public operations


def fd_christoffels(metric: ChartMetric, point: Sequence[float],
                    h: Optional[float] = None) -> np.ndarray:
    """Christoffel symbols Gamma^k_ij at one point, shape (d, d, d).

    All metric partials are second-order central differences of step
    h; the upper index comes from a dense linear solve against the
    metric matrix.
    """
    if h is None:
        h = metric.default_step()
    pt = np.asarray(point, dtype=float)[None, :]
    metric.require_interior(pt, h)
    _, gamma = _christoffels_batch(metric, pt, h)
    return gamma[0]


def fd_sectional(metric: ChartMetric, point: Sequence[float], i: int, j: int,
                 h: Optional[float] = None, normal: bool = False) -> float:
    """Sectional curvature of the coordinate plane (i, j) at a point.

    The default path divides g(R(e_i, e_j) e_j, e_i) by the plane area
    g_ii g_jj - g_ij^2 and is valid in any chart.  With normal=True the
    denominator is skipped, which is exact only where the chart is
    normal (G = identity, first derivatives zero); that variant exists
    to test the simplified formula on synthetically normalized charts.
    """
    if i == j:
        raise DegeneratePlaneError("coordinate plane needs two distinct axes")
    if h is None:
        h = metric.default_step()
    pt = np.asarray(point, dtype=float)[None, :]
    metric.require_interior(pt, 3.0 * h)
    G, _, _, riem = _riemann_batch(metric, pt, h)
    # The exact lowered tensor satisfies R_ijij = R_jiji; averaging the
    # two FD assemblies restores that pair symmetry exactly, so the
    # result is invariant under swapping i and j.
    num = 0.5 * (float(np.einsum("l,l->", G[0, i, :], riem[0, :, j, i, j]))
                 + float(np.einsum("l,l->", G[0, j, :], riem[0, :, i, j, i])))
    if normal:
        return num
    den = float(G[0, i, i] * G[0, j, j] - G[0, i, j] ** 2)
    if abs(den) <= 1e-12:
        raise DegeneratePlaneError(
            "coordinate plane (%d, %d) is degenerate: area %g" % (i, j, den)
        )
    return num / den


def fd_scalar_curvature(metric: ChartMetric, point, h: Optional[float] = None,
                        richardson: bool = False):
    """Scalar curvature at a point (or an (N, d) batch of points).

    Assembled as the trace of the Ricci tensor of the FD curvature
    tensor.  With richardson=True the h and h/2 results are combined
    as (4 R(h/2) - R(h)) / 3, upgrading the leading error to O(h^4).
    """
    if h is None:
        h = metric.default_step()
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    metric.require_interior(pts, 3.0 * h)
    out = _scalar_batch(metric, pts, h)
    if richardson:
        finer = _scalar_batch(metric, pts, h / 2.0)
        out = (4.0 * finer - out) / 3.0
    return float(out[0]) if single else out


@dataclass(frozen=True)
class CrossCheckReport:
    """Outcome of a closed-form vs finite-difference comparison."""

    tol: float
    h: float
    n_points: int
    max_abs_diff: float
    max_abs_diff_half: float
    ratio: float
    argmax_point: Tuple[float, ...]
    passed: bool

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return ("[%s] max|closed - fd| = %.3e at h=%.1e (tol %.1e), "
                "halving ratio %.2f" %
                (verdict, self.max_abs_diff, self.h, self.tol, self.ratio))

    def to_obj(self):
        return {
            "tol": self.tol,
            "h": self.h,
            "n_points": self.n_points,
            "max_abs_diff": self.max_abs_diff,
            "max_abs_diff_half": self.max_abs_diff_half,
            "ratio": self.ratio,
            "argmax_point": list(self.argmax_point),
            "passed": self.passed,
        }


def cross_check(closed_form: Callable[[np.ndarray], np.ndarray],
                metric: ChartMetric, grid: np.ndarray,
                h: Optional[float] = None, tol: float = 1e-4,
                richardson: bool = False) -> CrossCheckReport:
    """Compare a closed-form scalar curvature against the FD engine.

    ``closed_form`` receives the (N, d) grid and returns per-point
    values.  The report carries the max absolute difference at steps h
    and h/2 and their ratio; second-order stencils put the ratio near
    4 on smooth interiors.  Passing means the h-level difference is
    within tol.  With ``richardson`` each level is the extrapolated
    pair (4 R_{h/2} - R_h)/3, cancelling the h^2 term, and the ratio
    lands near 16 instead.
    """
    if h is None:
        h = metric.default_step()
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    metric.require_interior(pts, 3.0 * h)
    want = np.asarray(closed_form(pts), dtype=float)
    if richardson:
        coarse = _scalar_batch(metric, pts, h)
        mid = _scalar_batch(metric, pts, h / 2.0)
        fine = _scalar_batch(metric, pts, h / 4.0)
        got = (4.0 * mid - coarse) / 3.0
        got_half = (4.0 * fine - mid) / 3.0
    else:
        got = _scalar_batch(metric, pts, h)
        got_half = _scalar_batch(metric, pts, h / 2.0)
    diff = np.abs(want - got)
    diff_half = np.abs(want - got_half)
    worst = int(np.argmax(diff))
    max_diff = float(diff[worst])
    max_half = float(np.max(diff_half))
    ratio = max_diff / max_half if max_half > 0.0 else math.inf
    return CrossCheckReport(
        tol=float(tol),
        h=float(h),
        n_points=pts.shape[0],
        max_abs_diff=max_diff,
        max_abs_diff_half=max_half,
        ratio=ratio,
        argmax_point=tuple(float(x) for x in pts[worst]),
        passed=bool(max_diff <= tol),
    )
