"""Smooth warping functions with exact derivative jets.

A warping function is a smooth profile beta: [0, b] -> [0, inf) used as the
radial scale of a rotationally symmetric metric dr^2 + beta(r)^2 ds^2.  Every
profile in this library is a closed combinator tree over a fixed set of
analytic primitives, so derivatives up to order ``K_MAX`` are exact (truncated
Taylor arithmetic per node) rather than finite-differenced.

Jets are carried in Taylor-coefficient form: an array J of shape (K+1, n)
holds J[k] = f^(k)(r_i) / k! at each of n base points.  The recurrences below
(Cauchy products, composition by Horner, reciprocal / exp / sqrt series,
series inversion) are the standard manipulations of truncated power series.

The jet-space metric implemented by :func:`jet_distance`,

    D(x, y) = sup_k min(|x_k - y_k|, 1) / (k + 1),

metrises the product topology on truncated jets.  The division index starts
at 1 (the value entry x_0 contributes min(|dx_0|, 1)/1), since dividing by a
zero index is undefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np

from .errors import InvalidMetricError, RangeError, UnsupportedOrderError
from .quadrature import integrate_from

__all__ = [
    "K_MAX",
    "GRID_EPS",
    "Const",
    "Affine",
    "SinCap",
    "SmoothStep",
    "Sum",
    "Prod",
    "Compose",
    "Deriv",
    "Antider",
    "Sqrt",
    "Recip",
    "InverseOf",
    "glue",
    "WarpFunction",
    "JetVector",
    "jet_distance",
    "MembershipReport",
    "check_B_membership",
    "check_W_membership",
    "rescale_to_unit",
    "arc_length_reparam",
    "to_descriptor",
    "from_descriptor",
]

K_MAX = 6

# Evaluation grids exclude r < GRID_EPS * b: for profiles with beta(0) = 0 the
# curvature formulas are 0/0 at the origin and the limit is never needed.
GRID_EPS = 1e-4

QUAD_TOL = 1e-10

_EQ_TOL = 1e-8


# ---------------------------------------------------------------------------
# Truncated Taylor arithmetic on coefficient arrays of shape (K+1, n).
# ---------------------------------------------------------------------------

def _t_mul(u, v):
    """Cauchy product of two coefficient arrays."""
    K = u.shape[0] - 1
    out = np.zeros_like(u)
    for k in range(K + 1):
        for j in range(k + 1):
            out[k] += u[j] * v[k - j]
    return out


def _t_sin_cos(u):
    """Coefficients of sin(u) and cos(u); k s_k = sum j u_j c_{k-j} etc."""
    K = u.shape[0] - 1
    s = np.zeros_like(u)
    c = np.zeros_like(u)
    s[0] = np.sin(u[0])
    c[0] = np.cos(u[0])
    for k in range(1, K + 1):
        ss = np.zeros_like(u[0])
        cc = np.zeros_like(u[0])
        for j in range(1, k + 1):
            ss += j * u[j] * c[k - j]
            cc += j * u[j] * s[k - j]
        s[k] = ss / k
        c[k] = -cc / k
    return s, c


def _t_exp(u):
    K = u.shape[0] - 1
    e = np.zeros_like(u)
    e[0] = np.exp(u[0])
    for k in range(1, K + 1):
        acc = np.zeros_like(u[0])
        for j in range(1, k + 1):
            acc += j * u[j] * e[k - j]
        e[k] = acc / k
    return e


def _t_recip(u):
    K = u.shape[0] - 1
    v = np.zeros_like(u)
    v[0] = 1.0 / u[0]
    for k in range(1, K + 1):
        acc = np.zeros_like(u[0])
        for j in range(1, k + 1):
            acc += u[j] * v[k - j]
        v[k] = -v[0] * acc
    return v


def _t_sqrt(u):
    K = u.shape[0] - 1
    if np.any(u[0] < -1e-9):
        raise InvalidMetricError("square root of negative values in a rep tree")
    v = np.zeros_like(u)
    v[0] = np.sqrt(np.maximum(u[0], 0.0))
    if K == 0:
        return v
    # At a root of the radicand the jet recurrence is singular.  The floor
    # keeps those columns finite (never inf/nan) so that a mollifier weight
    # which is exactly zero there still annihilates them in a glued tree.
    den = np.maximum(2.0 * v[0], 1e-12)
    for k in range(1, K + 1):
        acc = np.zeros_like(u[0])
        for j in range(1, k):
            acc += v[j] * v[k - j]
        v[k] = (u[k] - acc) / den
    return v


def _t_compose(C, U):
    """Coefficients of outer o inner, from outer coefficients C at U[0] (Horner)."""
    K = U.shape[0] - 1
    Ut = U.copy()
    Ut[0] = np.zeros_like(U[0])
    R = np.zeros_like(U)
    R[0] = C[K].copy()
    for m in range(K - 1, -1, -1):
        R = _t_mul(Ut, R)
        R[0] = R[0] + C[m]
    return R


# ---------------------------------------------------------------------------
# Combinator nodes.  Each node implements taylor(r, K) -> (K+1, n) array for a
# 1-d float array r.  Nodes are immutable and never check domains; domain
# policing belongs to WarpFunction.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float

    def taylor(self, r, K):
        out = np.zeros((K + 1, r.size))
        out[0] = self.value
        return out


@dataclass(frozen=True)
class Affine:
    intercept: float
    slope: float

    def taylor(self, r, K):
        out = np.zeros((K + 1, r.size))
        out[0] = self.intercept + self.slope * r
        if K >= 1:
            out[1] = self.slope
        return out


@dataclass(frozen=True)
class SinCap:
    """r -> delta * sin(r / delta), the hemispherical-cap profile."""

    delta: float

    def taylor(self, r, K):
        u = np.zeros((K + 1, r.size))
        u[0] = r / self.delta
        if K >= 1:
            u[1] = 1.0 / self.delta
        s, _ = _t_sin_cos(u)
        return self.delta * s


@dataclass(frozen=True)
class SmoothStep:
    """C-infinity monotone ramp: 0 for x <= x0, 1 for x >= x1.

    Built from the flat bump psi(t) = exp(-1/t) (t > 0, else 0) as
    S = psi(u) / (psi(u) + psi(1-u)) with u the rescaling of [x0, x1] to
    [0, 1].  Every derivative vanishes identically outside (x0, x1), so
    gluing with S passes jets through unchanged there.
    """

    x0: float
    x1: float

    def __post_init__(self):
        if not self.x1 > self.x0:
            raise InvalidMetricError("smooth step needs x1 > x0")

    def taylor(self, r, K):
        width = self.x1 - self.x0
        u = np.zeros((K + 1, r.size))
        u0 = (r - self.x0) / width
        # Clamp into the open unit interval for the series work; the flat
        # regions are overwritten with exact constant jets below.
        u[0] = np.clip(u0, 1e-12, 1.0 - 1e-12)
        if K >= 1:
            u[1] = 1.0 / width
        a = _t_exp(-_t_recip(u))
        um = -u
        um[0] = 1.0 - u[0]
        b = _t_exp(-_t_recip(um))
        s = _t_mul(a, _t_recip(a + b))
        lo = u0 <= 0.0
        hi = u0 >= 1.0
        s[:, lo] = 0.0
        s[:, hi] = 0.0
        s[0, hi] = 1.0
        return s


def _as_tuple(x):
    return tuple(x)


@dataclass(frozen=True)
class Sum:
    terms: Tuple
    weights: Tuple = None

    def __post_init__(self):
        object.__setattr__(self, "terms", _as_tuple(self.terms))
        w = self.weights
        if w is None:
            w = (1.0,) * len(self.terms)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        if len(self.weights) != len(self.terms):
            raise InvalidMetricError("one weight per summand required")

    def taylor(self, r, K):
        out = np.zeros((K + 1, r.size))
        for w, t in zip(self.weights, self.terms):
            out += w * t.taylor(r, K)
        return out


@dataclass(frozen=True)
class Prod:
    factors: Tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", _as_tuple(self.factors))

    def taylor(self, r, K):
        out = self.factors[0].taylor(r, K)
        for fac in self.factors[1:]:
            out = _t_mul(out, fac.taylor(r, K))
        return out


@dataclass(frozen=True)
class Compose:
    outer: object
    inner: object

    def taylor(self, r, K):
        U = self.inner.taylor(r, K)
        C = self.outer.taylor(U[0], K)
        return _t_compose(C, U)


@dataclass(frozen=True)
class Deriv:
    child: object
    order: int = 1

    def taylor(self, r, K):
        m = self.order
        cj = self.child.taylor(r, K + m)
        out = np.zeros((K + 1, r.size))
        for k in range(K + 1):
            out[k] = cj[k + m] * (math.factorial(k + m) / math.factorial(k))
        return out


@dataclass(frozen=True)
class Antider:
    """F(r) = c0 + int_{x0}^{r} child; the value row is quadrature, higher rows exact."""

    child: object
    x0: float = 0.0
    c0: float = 0.0

    def taylor(self, r, K):
        out = np.zeros((K + 1, r.size))
        out[0] = self.c0 + integrate_from(
            lambda x: self.child.taylor(x, 0)[0], self.x0, r, tol=QUAD_TOL
        )
        if K >= 1:
            cj = self.child.taylor(r, K - 1)
            for k in range(1, K + 1):
                out[k] = cj[k - 1] / k
        return out


@dataclass(frozen=True)
class Sqrt:
    child: object

    def taylor(self, r, K):
        return _t_sqrt(self.child.taylor(r, K))


@dataclass(frozen=True)
class Recip:
    """Pointwise reciprocal 1/child; the child must stay away from zero."""

    child: object

    def taylor(self, r, K):
        u = self.child.taylor(r, K)
        if np.any(np.abs(u[0]) < 1e-12):
            raise InvalidMetricError("reciprocal of a value too close to zero")
        return _t_recip(u)


@dataclass(frozen=True)
class InverseOf:
    """Inverse of a strictly increasing child map on [lo, hi].

    Values come from a safeguarded (bracketed) Newton iteration; jets follow
    by truncated power-series inversion about the solved point, which needs a
    nonvanishing first derivative of the child there.
    """

    child: object
    lo: float
    hi: float

    def taylor(self, s, K):
        r = _invert_monotone(self.child, self.lo, self.hi, s)
        out = np.zeros((K + 1, s.size))
        out[0] = r
        if K == 0:
            return out
        C = self.child.taylor(r, K)
        if np.any(C[1] <= 0.0):
            raise InvalidMetricError(
                "series inversion requires a strictly increasing child"
            )
        F = C.copy()
        F[0] = np.zeros_like(C[0])
        powers = [None, F]
        for m in range(2, K + 1):
            powers.append(_t_mul(powers[-1], F))
        g = [None] * (K + 1)
        for k in range(1, K + 1):
            acc = np.ones_like(r) if k == 1 else np.zeros_like(r)
            for m in range(1, k):
                acc = acc - g[m] * powers[m][k]
            g[k] = acc / powers[k][k]
            out[k] = g[k]
        return out


def _invert_monotone(node, lo, hi, s, max_iter=80):
    ends = node.taylor(np.array([lo, hi], dtype=float), 0)[0]
    flo, fhi = float(ends[0]), float(ends[1])
    if not fhi > flo:
        raise InvalidMetricError("cannot invert a non-increasing map")
    scale = max(abs(flo), abs(fhi), 1.0)
    s = np.asarray(s, dtype=float)
    if np.any(s < flo - 1e-9 * scale) or np.any(s > fhi + 1e-9 * scale):
        raise RangeError("inverse evaluated outside the child's range")
    sc = np.clip(s, flo, fhi)
    lb = np.full(sc.shape, float(lo))
    ub = np.full(sc.shape, float(hi))
    r = lo + (hi - lo) * (sc - flo) / (fhi - flo)
    tol = 1e-14 * scale
    for _ in range(max_iter):
        J = node.taylor(r, 1)
        f = J[0] - sc
        if np.max(np.abs(f)) <= tol:
            break
        pos = f > 0
        ub = np.where(pos, r, ub)
        lb = np.where(pos, lb, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / J[1]
        rn = r - step
        bad = ~np.isfinite(rn) | (rn < lb) | (rn > ub)
        rn = np.where(bad, 0.5 * (lb + ub), rn)
        if np.max(np.abs(rn - r)) <= 1e-16 * (hi - lo):
            r = rn
            break
        r = rn
    return np.clip(r, lo, hi)


def glue(left, right, at, width):
    """(1 - S) * left + S * right with S a smooth step over [at - w/2, at + w/2].

    Exact outside the window: the step's jets are identically the constant
    0 / 1 jets there, so each branch passes through unchanged (and a branch
    that is singular where its weight vanishes is still annihilated).
    """
    s = SmoothStep(at - 0.5 * width, at + 0.5 * width)
    one_minus = Sum((Const(1.0), s), (1.0, -1.0))
    return Sum((Prod((one_minus, left)), Prod((s, right))))


# ---------------------------------------------------------------------------
# WarpFunction, jets, and the jet metric.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpFunction:
    """A smooth profile on [0, domain_end] with exact jets to order K_MAX."""

    domain_end: float
    rep: object

    def __post_init__(self):
        if not self.domain_end > 0:
            raise InvalidMetricError("domain_end must be positive")

    def coeffs(self, r, K):
        """Taylor coefficient rows f^(k)/k!, k = 0..K, at the points ``r``."""
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        return self.rep.taylor(rr, K)

    def eval(self, r, order=0):
        if not isinstance(order, (int, np.integer)) or not 0 <= order <= K_MAX:
            raise UnsupportedOrderError(
                f"derivative order {order!r} outside 0..{K_MAX}"
            )
        scalar = np.asarray(r).ndim == 0
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        b = self.domain_end
        slack = 1e-9 * b
        if np.any(rr < -slack) or np.any(rr > b + slack):
            raise RangeError(f"evaluation point outside [0, {b}]")
        rr = np.clip(rr, 0.0, b)
        vals = self.rep.taylor(rr, int(order))[order] * math.factorial(order)
        return float(vals[0]) if scalar else vals

    def __call__(self, r):
        return self.eval(r, 0)

    def jet_at(self, t0):
        """Truncated jet (value and K_MAX derivatives) at t0."""
        t0 = float(t0)
        b = self.domain_end
        if not -1e-9 * b <= t0 <= b * (1.0 + 1e-9):
            raise RangeError(f"jet base point outside [0, {b}]")
        c = self.rep.taylor(np.array([min(max(t0, 0.0), b)]), K_MAX)[:, 0]
        entries = tuple(float(c[k]) * math.factorial(k) for k in range(K_MAX + 1))
        return JetVector(base_point=t0, entries=entries)

    def jet_at_end(self):
        return self.jet_at(self.domain_end)


@dataclass(frozen=True)
class JetVector:
    """Value and derivatives (entries[k] = k-th derivative) at a base point."""

    base_point: float
    entries: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(float(x) for x in self.entries))


def jet_distance(j1, j2):
    """sup_k min(|x_k - y_k|, 1) / (k+1): the product-topology metric on jets."""
    if len(j1.entries) != len(j2.entries):
        raise ValueError("jets truncated at different orders")
    best = 0.0
    for k, (x, y) in enumerate(zip(j1.entries, j2.entries)):
        best = max(best, min(abs(x - y), 1.0) / (k + 1))
    return best


# ---------------------------------------------------------------------------
# Membership reports.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MembershipReport:
    checks: Mapping[str, bool]
    details: Mapping[str, float]

    @property
    def passed(self):
        return all(self.checks.values())

    def __str__(self):
        lines = []
        for name, ok in self.checks.items():
            lines.append(f"{'PASS' if ok else 'FAIL'}  {name}")
        return "\n".join(lines)


def check_B_membership(w, npoints=1024):
    """Disk-profile conditions at the origin plus interior positivity.

    Checks beta(0) = 0, beta'(0) = 1, vanishing even derivatives at 0 (orders
    2, 4, 6), and beta > 0 on a grid over (GRID_EPS * b, b].
    """
    j0 = w.jet_at(0.0)
    b = w.domain_end
    grid = np.linspace(GRID_EPS * b, b, npoints)
    vals = w.eval(grid, 0)
    max_even = max(abs(j0.entries[2]), abs(j0.entries[4]), abs(j0.entries[6]))
    checks = {
        "zero_at_origin": abs(j0.entries[0]) <= _EQ_TOL,
        "unit_slope_at_origin": abs(j0.entries[1] - 1.0) <= _EQ_TOL,
        "even_derivatives_vanish_at_origin": max_even <= _EQ_TOL,
        "positive_on_interior": bool(np.min(vals) > 0.0),
    }
    details = {
        "value_at_origin": j0.entries[0],
        "slope_at_origin": j0.entries[1],
        "max_even_derivative_at_origin": max_even,
        "min_value": float(np.min(vals)),
    }
    return MembershipReport(checks, details)


def check_W_membership(w, fibre_dim, npoints=1024):
    """Conditions for a profile to define a standard-region warped metric.

    On top of B-membership: nondecreasing; strictly concave on an initial
    window (0, r_d] (the detected r_d is reported); a horizontal endpoint,
    i.e. the jet at b is (omega(b), 0, ..., 0); values within [0, b]; and
    positive scalar curvature of dr^2 + omega^2 ds^2 on the disk of
    dimension ``fibre_dim``, checked on a grid.
    """
    from .curvature import scalar_curvature_single  # deferred: curvature builds on warp

    if fibre_dim < 2:
        raise InvalidMetricError("fibre_dim (disk dimension) must be at least 2")
    breport = check_B_membership(w, npoints=npoints)
    b = w.domain_end
    grid = np.linspace(GRID_EPS * b, b, npoints)
    C = w.coeffs(grid, 2)
    d1 = C[1]
    d2 = 2.0 * C[2]

    concave = d2 < -_EQ_TOL
    if not concave[0]:
        r_d = 0.0
    elif concave.all():
        r_d = float(grid[-1])
    else:
        r_d = float(grid[int(np.argmin(concave)) - 1])

    jb = w.jet_at(b)
    end_sup = max(abs(x) for x in jb.entries[1:])

    R = scalar_curvature_single(w, fibre_dim, grid)
    min_R = float(np.min(R))

    checks = {
        "b_membership": breport.passed,
        "nondecreasing": bool(np.min(d1) >= -1e-10),
        "initial_concavity": r_d > 0.0,
        "horizontal_endpoint": end_sup <= _EQ_TOL,
        "range_within_domain": bool(np.max(C[0]) <= b + _EQ_TOL),
        "curvature_positive": min_R > 0.0,
    }
    details = {
        "r_d": r_d,
        "min_slope": float(np.min(d1)),
        "endpoint_jet_sup": end_sup,
        "min_scalar_curvature": min_R,
        "max_value": float(np.max(C[0])),
    }
    details.update({f"b_{k}": v for k, v in breport.details.items()})
    return MembershipReport(checks, details)


# ---------------------------------------------------------------------------
# Reparameterisations.
# ---------------------------------------------------------------------------

def rescale_to_unit(w):
    """The profile r -> w(b r) on [0, 1]; the k-th derivative picks up b^k."""
    return WarpFunction(1.0, Compose(w.rep, Affine(0.0, w.domain_end)))


def arc_length_reparam(alpha_scale, beta_scale, npoints=1024):
    """Unit-speed radial coordinate change for dr^2-scale alpha, sphere-scale beta.

    For a rotationally symmetric metric alpha(r)^2 dr^2 + beta(r)^2 ds^2 on
    [0, rho], the arc-length coordinate is s(r) = int_0^r alpha(u) du and the
    metric becomes ds^2 + omega(s)^2 with omega = beta o r(s).  Returns omega
    on [0, s(rho)] with the inverse r(s) embedded in the rep tree, so jets of
    omega remain exact.
    """
    rho = alpha_scale.domain_end
    if abs(beta_scale.domain_end - rho) > 1e-12 * max(rho, 1.0):
        raise InvalidMetricError("alpha and beta must share a domain")
    probe = np.linspace(0.0, rho, npoints)
    if np.min(alpha_scale.eval(probe, 0)) <= 0.0:
        raise InvalidMetricError("alpha must be positive on [0, rho]")
    s_node = Antider(alpha_scale.rep, 0.0, 0.0)
    total = float(integrate_from(lambda x: alpha_scale.rep.taylor(x, 0)[0], 0.0, np.array([rho]), tol=QUAD_TOL)[0])
    rep = Compose(beta_scale.rep, InverseOf(s_node, 0.0, rho))
    return WarpFunction(total, rep)


# ---------------------------------------------------------------------------
# JSON descriptors (lossless round trip of the rep tree).
# ---------------------------------------------------------------------------

def to_descriptor(obj):
    """Nested plain-dict descriptor of a node or WarpFunction."""
    if isinstance(obj, WarpFunction):
        return {
            "kind": "warp_function",
            "domain_end": obj.domain_end,
            "rep": to_descriptor(obj.rep),
        }
    if isinstance(obj, Const):
        return {"kind": "const", "value": obj.value}
    if isinstance(obj, Affine):
        return {"kind": "affine", "intercept": obj.intercept, "slope": obj.slope}
    if isinstance(obj, SinCap):
        return {"kind": "sin_cap", "delta": obj.delta}
    if isinstance(obj, SmoothStep):
        return {"kind": "smooth_step", "x0": obj.x0, "x1": obj.x1}
    if isinstance(obj, Sum):
        return {
            "kind": "sum",
            "terms": [to_descriptor(t) for t in obj.terms],
            "weights": list(obj.weights),
        }
    if isinstance(obj, Prod):
        return {"kind": "prod", "factors": [to_descriptor(f) for f in obj.factors]}
    if isinstance(obj, Compose):
        return {
            "kind": "compose",
            "outer": to_descriptor(obj.outer),
            "inner": to_descriptor(obj.inner),
        }
    if isinstance(obj, Deriv):
        return {"kind": "deriv", "child": to_descriptor(obj.child), "order": obj.order}
    if isinstance(obj, Antider):
        return {
            "kind": "antider",
            "child": to_descriptor(obj.child),
            "x0": obj.x0,
            "c0": obj.c0,
        }
    if isinstance(obj, Sqrt):
        return {"kind": "sqrt", "child": to_descriptor(obj.child)}
    if isinstance(obj, Recip):
        return {"kind": "recip", "child": to_descriptor(obj.child)}
    if isinstance(obj, InverseOf):
        return {
            "kind": "inverse",
            "child": to_descriptor(obj.child),
            "lo": obj.lo,
            "hi": obj.hi,
        }
    raise InvalidMetricError(f"not a descriptor-serialisable object: {type(obj)!r}")


def from_descriptor(d):
    """Rebuild a node or WarpFunction from its descriptor."""
    kind = d["kind"]
    if kind == "warp_function":
        return WarpFunction(float(d["domain_end"]), from_descriptor(d["rep"]))
    if kind == "const":
        return Const(float(d["value"]))
    if kind == "affine":
        return Affine(float(d["intercept"]), float(d["slope"]))
    if kind == "sin_cap":
        return SinCap(float(d["delta"]))
    if kind == "smooth_step":
        return SmoothStep(float(d["x0"]), float(d["x1"]))
    if kind == "sum":
        return Sum(
            tuple(from_descriptor(t) for t in d["terms"]),
            tuple(float(w) for w in d["weights"]),
        )
    if kind == "prod":
        return Prod(tuple(from_descriptor(f) for f in d["factors"]))
    if kind == "compose":
        return Compose(from_descriptor(d["outer"]), from_descriptor(d["inner"]))
    if kind == "deriv":
        return Deriv(from_descriptor(d["child"]), int(d["order"]))
    if kind == "antider":
        return Antider(from_descriptor(d["child"]), float(d["x0"]), float(d["c0"]))
    if kind == "sqrt":
        return Sqrt(from_descriptor(d["child"]))
    if kind == "recip":
        return Recip(from_descriptor(d["child"]))
    if kind == "inverse":
        return InverseOf(from_descriptor(d["child"]), float(d["lo"]), float(d["hi"]))
    raise InvalidMetricError(f"unknown descriptor kind: {kind!r}")
