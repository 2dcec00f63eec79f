"""Closed-form scalar curvature of rotationally symmetric metrics.

For the single warped product dr^2 + beta(r)^2 ds^2_{n-1} on an n-disk,

    R_beta = -2(n-1) beta''/beta + (n-1)(n-2) (1 - beta'^2) / beta^2,

which is n(n-1)/delta^2 for the round profile beta = delta sin(r/delta) and
(n-1)(n-2)/delta^2 on a cylinder beta == delta.  For the doubly warped
dr^2 + phi^2 ds^2_{n-1} + psi^2 dl^2,

    R = (n-1)(n-2)(1 - phi'^2)/phi^2 - 2(n-1)(phi'' + phi' psi'/psi)/phi
        - 2 psi''/psi.

The bent cylinder uses the doubly warped form with psi = c + alpha(r) where
alpha is the unit-speed abscissa of the profile curve; here it is evaluated
directly from beta via alpha' = -sqrt(1 - beta'^2), alpha'' = beta' beta''
/ sqrt(1 - beta'^2), independently of the combinator-tree route, so the two
can be cross-checked.

The bend-transition family on [0, b] x [-L, L + pi/2] uses

    R = (n-2)(n-3)(1 - beta_r^2)/beta^2 - 2(n-2) beta_rr/beta
        - (2n/beta) (beta_r w_r / w) - 2 w_rr / w,

with the 2n coefficient on the mixed term as printed in the source formula
(the general doubly warped form would give 2(n-2); see the bend module notes
where the difference is measured rather than silently resolved).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

import numpy as np

from .errors import InvalidMetricError, RangeError
from .warp import GRID_EPS, WarpFunction

__all__ = [
    "RotSymMetric",
    "GridSpec",
    "CurvatureFamily",
    "PositivityCertificate",
    "scalar_curvature_single",
    "scalar_curvature_double_warped",
    "bent_cylinder_curvature",
    "bend_family_curvature",
    "certify_positive",
    "POSITIVITY_FLOOR",
]

# Grid sampling cannot certify an open condition; we certify a margin.
POSITIVITY_FLOOR = 1e-6

DEFAULT_GRID_POINTS = 2048


def _jets2(fn, r):
    """(value, first, second derivative) rows of a WarpFunction at points r."""
    C = fn.coeffs(r, 2)
    return C[0], C[1], 2.0 * C[2]


def _check_interior(fn, r):
    b = fn.domain_end
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < GRID_EPS * b * (1.0 - 1e-9)) or np.any(r > b * (1.0 + 1e-9)):
        raise RangeError(
            f"curvature evaluation restricted to [{GRID_EPS * b}, {b}]"
        )
    return r


def scalar_curvature_single(beta, n, r):
    """R of dr^2 + beta^2 ds^2_{n-1} at radii r (scalar or array)."""
    if n < 2:
        raise InvalidMetricError("single warped product needs dimension n >= 2")
    scalar = np.asarray(r).ndim == 0
    rr = _check_interior(beta, r)
    b0, b1, b2 = _jets2(beta, rr)
    if np.any(b0 <= 0.0):
        raise InvalidMetricError("degenerate metric: beta <= 0 on evaluation points")
    R = -2.0 * (n - 1) * b2 / b0 + (n - 1) * (n - 2) * (1.0 - b1**2) / b0**2
    return float(R[0]) if scalar else R


def scalar_curvature_double_warped(phi, psi, n, r):
    """R of dr^2 + phi^2 ds^2_{n-1} + psi^2 dl^2 at radii r."""
    if n < 2:
        raise InvalidMetricError("doubly warped product needs dimension n >= 2")
    scalar = np.asarray(r).ndim == 0
    rr = _check_interior(phi, r)
    p0, p1, p2 = _jets2(phi, rr)
    q0, q1, q2 = _jets2(psi, rr)
    if np.any(p0 <= 0.0) or np.any(q0 <= 0.0):
        raise InvalidMetricError("degenerate metric: non-positive scale function")
    R = (
        (n - 1) * (n - 2) * (1.0 - p1**2) / p0**2
        - 2.0 * (n - 1) * (p2 + p1 * q1 / q0) / p0
        - 2.0 * q2 / q0
    )
    return float(R[0]) if scalar else R


def bent_cylinder_curvature(beta, c, n, r):
    """R of the bent cylinder dr^2 + beta^2 ds^2_{n-1} + (c + alpha)^2 dl^2.

    alpha, alpha', alpha'' are derived here from beta through the unit-speed
    relation alpha'^2 + beta'^2 = 1 (alpha' <= 0), not from a stored rep
    tree, so this is an independent route to the same metric as
    ``bend.bent_cylinder_metric``.
    """
    from .quadrature import integrate_from

    if n < 2:
        raise InvalidMetricError("bent cylinder needs dimension n >= 2")
    scalar = np.asarray(r).ndim == 0
    rr = _check_interior(beta, r)
    b = beta.domain_end
    b0, b1, b2 = _jets2(beta, rr)
    if np.any(b0 <= 0.0):
        raise InvalidMetricError("degenerate metric: beta <= 0 on evaluation points")
    if np.max(np.abs(beta.eval(np.linspace(0.0, b, 2048), 1))) > 1.0 + 1e-9:
        raise InvalidMetricError("|beta'| > 1: not unit-speed compatible")
    if not c > 2.0 * float(np.max(beta.eval(np.linspace(0.0, b, 2048), 0))):
        raise InvalidMetricError("invalid bend: need c > 2 max beta for the embedding")

    speed = np.sqrt(np.maximum(1.0 - b1**2, 0.0))

    def _speed(u):
        du = beta.coeffs(u, 1)[1]
        return np.sqrt(np.maximum(1.0 - du**2, 0.0))

    # The abscissa enters R at first order through c + alpha, and prefix
    # errors accumulate over the evaluation points, so the quadrature runs
    # a few digits tighter than the 1e-10 consistency checks downstream.
    alpha = integrate_from(_speed, b, rr, tol=1e-13) * -1.0  # int_r^b = -int_b^r
    d_alpha = -speed
    dd_alpha = b1 * b2 / np.maximum(speed, 1e-150)
    den = c + alpha
    R = (
        (n - 1) * (n - 2) * (1.0 - b1**2) / b0**2
        - 2.0 * (n - 1) * (b2 + b1 * d_alpha / den) / b0
        - 2.0 * dd_alpha / den
    )
    return float(R[0]) if scalar else R


def bend_family_curvature(beta, w_theta, n, r, t):
    """R of dr^2 + w(r,t)^2 dt^2 + beta(r)^2 ds^2_{n-2} at (r, t) points.

    ``w_theta`` must provide w_jets(r, t) -> (w, w_r, w_rr); no t-derivatives
    enter (the (r, t)-surface factor has Gauss curvature -w_rr/w for any
    t-dependence).  r and t broadcast together.
    """
    if n < 3:
        raise InvalidMetricError("bend family needs dimension n >= 3")
    rr = np.asarray(r, dtype=float)
    tt = np.asarray(t, dtype=float)
    scalar = rr.ndim == 0 and tt.ndim == 0
    rr, tt = np.broadcast_arrays(np.atleast_1d(rr), np.atleast_1d(tt))
    shape = rr.shape
    rr = rr.ravel()
    tt = tt.ravel()
    _check_interior(beta, rr)
    b0, b1, b2 = _jets2(beta, rr)
    if np.any(b0 <= 0.0):
        raise InvalidMetricError("degenerate metric: beta <= 0 on evaluation points")
    w, w_r, w_rr = w_theta.w_jets(rr, tt)
    if np.any(w < 1.0 - 1e-9):
        raise InvalidMetricError("transition profile must satisfy w >= 1")
    R = (
        (n - 2) * (n - 3) * (1.0 - b1**2) / b0**2
        - 2.0 * (n - 2) * b2 / b0
        - (2.0 * n / b0) * (b1 * w_r / w)
        - 2.0 * w_rr / w
    )
    R = R.reshape(shape)
    return float(R.ravel()[0]) if scalar else R


# ---------------------------------------------------------------------------
# Metric descriptors and positivity certification.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotSymMetric:
    """Single-warped, doubly-warped, or product-with-line metric descriptor."""

    kind: str  # "single_warped" | "doubly_warped" | "product_with_line"
    beta: Optional[WarpFunction] = None
    phi: Optional[WarpFunction] = None
    psi: Optional[WarpFunction] = None
    sphere_dim: int = 0
    inner: Optional["RotSymMetric"] = None

    def __post_init__(self):
        if self.kind == "single_warped":
            # sphere_dim 1 (n = 2) is degenerate but evaluable: the
            # (n-1)(n-2) term drops and R = -2 beta''/beta, which is the
            # control case showing the dimension hypothesis is load-bearing.
            if self.beta is None or self.sphere_dim < 1:
                raise InvalidMetricError("single_warped needs beta and sphere_dim >= 1")
        elif self.kind == "doubly_warped":
            if self.phi is None or self.psi is None or self.sphere_dim < 1:
                raise InvalidMetricError(
                    "doubly_warped needs phi, psi and sphere_dim >= 1"
                )
        elif self.kind == "product_with_line":
            if self.inner is None:
                raise InvalidMetricError("product_with_line needs an inner metric")
        else:
            raise InvalidMetricError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def single_warped(cls, beta, sphere_dim):
        return cls(kind="single_warped", beta=beta, sphere_dim=sphere_dim)

    @classmethod
    def doubly_warped(cls, phi, psi, sphere_dim):
        return cls(kind="doubly_warped", phi=phi, psi=psi, sphere_dim=sphere_dim)

    @classmethod
    def product_with_line(cls, inner):
        return cls(kind="product_with_line", inner=inner)

    @property
    def radial_profile(self):
        if self.kind == "single_warped":
            return self.beta
        if self.kind == "doubly_warped":
            return self.phi
        return self.inner.radial_profile

    def scalar_curvature(self, r):
        """R at radius r; a line factor adds nothing."""
        if self.kind == "single_warped":
            return scalar_curvature_single(self.beta, self.sphere_dim + 1, r)
        if self.kind == "doubly_warped":
            return scalar_curvature_double_warped(self.phi, self.psi, self.sphere_dim + 1, r)
        return self.inner.scalar_curvature(r)


@dataclass(frozen=True)
class GridSpec:
    """Named axes (name, lo, hi, count) of a certification grid."""

    axes: Tuple[Tuple[str, float, float, int], ...]

    def __post_init__(self):
        for name, lo, hi, count in self.axes:
            if count < 1 or hi < lo:
                raise InvalidMetricError(f"bad grid axis {name!r}")

    def arrays(self):
        return [np.linspace(lo, hi, count) for _, lo, hi, count in self.axes]

    def meshes(self):
        return np.meshgrid(*self.arrays(), indexing="ij")

    def describe(self):
        return {
            name: {"lo": lo, "hi": hi, "count": count}
            for name, lo, hi, count in self.axes
        }


@dataclass(frozen=True)
class CurvatureFamily:
    """A parameterized curvature evaluator over a named grid.

    ``evaluator`` maps flattened per-axis arrays (in axis order) to scalar
    curvature values; used for (r, t) concordance profiles and (r, t, theta)
    bend families.
    """

    grid: GridSpec
    evaluator: object


@dataclass(frozen=True)
class PositivityCertificate:
    """Outcome of a grid positivity sweep.

    ``passed`` iff min_R >= floor.  The argmin is deterministic: ties break
    to the first grid point in row-major order, i.e. toward smaller r.
    """

    grid: Mapping
    min_R: float
    argmin: Mapping[str, float]
    floor: float
    margin: float
    passed: bool

    def to_obj(self):
        return {
            "grid": dict(self.grid),
            "min_R": self.min_R,
            "argmin": dict(self.argmin),
            "floor": self.floor,
            "margin": self.margin,
            "passed": self.passed,
        }


def _default_grid(metric, npoints):
    profile = metric.radial_profile
    b = profile.domain_end
    return GridSpec((("r", GRID_EPS * b, b, npoints),))


def certify_positive(target, grid=None, floor=POSITIVITY_FLOOR, npoints=DEFAULT_GRID_POINTS):
    """Grid positivity certificate for a RotSymMetric or a CurvatureFamily.

    Evaluates the closed-form scalar curvature at every grid point and
    certifies min R >= floor.  The reduction is deterministic (first
    minimizer in row-major order).
    """
    if isinstance(target, CurvatureFamily):
        spec = target.grid
        meshes = spec.meshes()
        flat = [m.ravel() for m in meshes]
        R = np.asarray(target.evaluator(*flat), dtype=float)
    else:
        spec = grid if grid is not None else _default_grid(target, npoints)
        if len(spec.axes) != 1:
            raise InvalidMetricError("RotSymMetric certification uses a 1-d radial grid")
        flat = [spec.arrays()[0]]
        R = np.asarray(target.scalar_curvature(flat[0]), dtype=float)

    k = int(np.argmin(R))
    min_R = float(R[k])
    argmin = {name: float(axis[k]) for (name, *_), axis in zip(spec.axes, flat)}
    return PositivityCertificate(
        grid=spec.describe(),
        min_R=min_R,
        argmin=argmin,
        floor=float(floor),
        margin=min_R - float(floor),
        passed=bool(min_R >= float(floor)),
    )
