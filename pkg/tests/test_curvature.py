"""Closed-form curvature: model values, consistency routes, certification."""

import math

import numpy as np
import pytest

from pscforge.curvature import (
    POSITIVITY_FLOOR,
    CurvatureFamily,
    GridSpec,
    RotSymMetric,
    bend_family_curvature,
    bent_cylinder_curvature,
    certify_positive,
    scalar_curvature_double_warped,
    scalar_curvature_single,
)
from pscforge.errors import InvalidMetricError, RangeError
from pscforge.torpedo import alpha_ordinate, perfect_torpedo
from pscforge.warp import (
    GRID_EPS,
    Affine,
    Const,
    Deriv,
    Prod,
    SinCap,
    Sum,
    WarpFunction,
)


def _round_profile(delta, b=None):
    """beta = delta sin(r/delta) on [0, b], default just shy of the far pole."""
    if b is None:
        b = delta * math.pi * 0.999
    return WarpFunction(b, SinCap(delta))


def test_single_warped_model_values():
    # Round sphere, Euclidean cone point, cylinder.
    beta = _round_profile(1.0)
    r = np.linspace(0.1, 1.5, 40)
    assert np.max(np.abs(scalar_curvature_single(beta, 4, r) - 12.0)) <= 1e-12

    line = WarpFunction(1.0, Affine(0.0, 1.0))
    assert scalar_curvature_single(line, 4, 0.5) == pytest.approx(0.0, abs=1e-12)

    neck = WarpFunction(1.0, Const(0.5))
    assert scalar_curvature_single(neck, 4, 0.5) == pytest.approx(24.0, abs=1e-12)


def test_single_warped_round_identity_all_dims():
    for n in (3, 4, 5, 6):
        for delta in (0.5, 1.0, 2.0):
            beta = WarpFunction(delta * math.pi / 2, SinCap(delta))
            b = beta.domain_end
            r = np.linspace(0.05 * b, b, 100)
            R = scalar_curvature_single(beta, n, r)
            target = n * (n - 1) / delta**2
            assert np.max(np.abs(R - target)) <= 1e-9


def test_single_warped_errors():
    beta = _round_profile(1.0)
    with pytest.raises(InvalidMetricError):
        scalar_curvature_single(beta, 1, 0.5)
    with pytest.raises(RangeError):
        scalar_curvature_single(beta, 4, -0.1)
    with pytest.raises(RangeError):
        scalar_curvature_single(beta, 4, beta.domain_end * 1.01)
    negative = WarpFunction(1.0, Affine(-0.5, 0.1))
    with pytest.raises(InvalidMetricError):
        scalar_curvature_single(negative, 4, 0.5)


def test_double_warped_model_values():
    one = WarpFunction(2.0, Const(1.0))
    assert scalar_curvature_double_warped(one, one, 4, 1.0) == pytest.approx(
        6.0, abs=1e-12
    )
    line = WarpFunction(2.0, Affine(0.0, 1.0))
    assert scalar_curvature_double_warped(line, one, 4, 1.0) == pytest.approx(
        0.0, abs=1e-12
    )
    # phi = sin r, psi = 3 + cos r at the equator: the psi terms vanish
    # there (phi' = 0, psi'' = 0) and the sphere terms give 6 + 6.
    beta = _round_profile(1.0)
    psi = WarpFunction(beta.domain_end, Sum((Const(3.0), Deriv(SinCap(1.0)))))
    assert scalar_curvature_double_warped(beta, psi, 4, math.pi / 2) == pytest.approx(
        12.0, abs=1e-12
    )
    with pytest.raises(InvalidMetricError):
        scalar_curvature_double_warped(beta, WarpFunction(beta.domain_end, Const(-1.0)), 4, 1.0)


def _round_closed_form(r, c, n, delta, b):
    """R of the bent round profile, re-derived from the doubly warped form.

    With beta = delta sin(r/delta) and the abscissa normalized to
    alpha(b) = 0, alpha(r) = delta (cos(r/delta) - cos(b/delta)) and

        R = n(n-1)/delta^2 + 2n cos(r/delta) / (delta (c + alpha)).

    The mixed bend term carries the sign of beta'*alpha': alpha decreases
    outward, so on the increasing half of the profile the bend ADDS
    curvature; flipping alpha' to +sin would subtract it instead, and the
    finite-difference oracle rules that variant out.
    """
    alpha = delta * (np.cos(r / delta) - math.cos(b / delta))
    return n * (n - 1) / delta**2 + 2.0 * n * np.cos(r / delta) / (
        delta * (c + alpha)
    )


def test_bent_cylinder_round_consistency_two_routes():
    # The bent-cylinder evaluator re-derives alpha from beta internally;
    # the doubly warped evaluator takes psi = c + alpha as an exact rep
    # tree.  Both must match the round closed form to 1e-10.
    n, c, delta = 4, 3.0, 1.0
    beta = _round_profile(delta)
    b = beta.domain_end
    grid = np.linspace(0.05 * b, 0.95 * b, 61)
    closed = _round_closed_form(grid, c, n, delta, b)

    R_bent = bent_cylinder_curvature(beta, c, n, grid)
    assert np.max(np.abs(R_bent - closed)) <= 1e-10

    psi = WarpFunction(b, Sum((Const(c - math.cos(b)), Deriv(SinCap(delta)))))
    R_dw = scalar_curvature_double_warped(beta, psi, n, grid)
    assert np.max(np.abs(R_dw - closed)) <= 1e-10


def test_bent_cylinder_equator_value():
    # At r = pi/2 every alpha term drops (beta' = 0 kills the mixed term
    # and alpha'' = beta' beta''/speed = 0), leaving 12 for any valid c.
    beta = _round_profile(1.0)
    for c in (3.0, 5.0, 50.0):
        assert bent_cylinder_curvature(beta, c, 4, math.pi / 2) == pytest.approx(
            12.0, abs=1e-12
        )


def test_bent_cylinder_axis_limit():
    # Near the cap tip cos -> 1 and alpha -> alpha(0); normalizing c so
    # that c + alpha(0) = 4 gives R -> 12 + 8/4 = 14.  The sign of the
    # bend term matters here: the +sin alpha' variant would give 10, which
    # disagrees with the finite-difference oracle by O(1).
    beta = _round_profile(1.0)
    b = beta.domain_end
    c = 3.0 + math.cos(b)  # c + alpha(0) = 3 + cos(r) at the tip
    assert c > 2.0  # embedding bound still satisfied, barely
    R = bent_cylinder_curvature(beta, c, 4, 1e-3 * b)
    assert R == pytest.approx(14.0, abs=1e-4)
    assert abs(R - 10.0) > 3.9


def test_bent_cylinder_large_c_limit():
    # The bend terms are O(1/c) with a 1/beta factor, so compare away
    # from the tip where beta is bounded below.
    eta = perfect_torpedo(1.0, math.pi)
    grid = np.linspace(0.3, math.pi, 100)
    R_single = scalar_curvature_single(eta, 4, grid)
    R_bent = bent_cylinder_curvature(eta, 1e6, 4, grid)
    assert np.max(np.abs(R_bent - R_single)) < 1e-4


def test_bent_cylinder_errors():
    eta = perfect_torpedo(1.0, math.pi)
    with pytest.raises(InvalidMetricError):
        bent_cylinder_curvature(eta, 1.5, 4, 1.0)  # c <= 2 max beta
    steep = WarpFunction(1.0, Affine(0.0, 1.2))
    with pytest.raises(InvalidMetricError):
        bent_cylinder_curvature(steep, 5.0, 4, 0.5)


class _UnitProfile:
    """w == 1: the unbent slice of a transition family."""

    def w_jets(self, r, t):
        z = np.zeros_like(r)
        return np.ones_like(r), z, z


class _BentBandProfile:
    """w = c + alpha(r): the fully bent slice."""

    def __init__(self, alpha_fn, c):
        self.alpha_fn = alpha_fn
        self.c = c

    def w_jets(self, r, t):
        C = self.alpha_fn.coeffs(r, 2)
        return self.c + C[0], C[1], 2.0 * C[2]


def test_bend_family_unbent_slice_reduces_to_single_warped():
    # With w == 1 all w-terms vanish and the (r, t) plane is flat, so the
    # value equals the single warped product one dimension down.
    eta = perfect_torpedo(1.0, math.pi)
    grid = np.linspace(0.3, math.pi, 100)
    R = bend_family_curvature(eta, _UnitProfile(), 5, grid, 0.0)
    assert np.max(np.abs(R - scalar_curvature_single(eta, 4, grid))) <= 1e-12


def test_bend_family_vs_bent_cylinder_index_convention():
    # The transition-family formula puts 2n on the mixed term where the
    # doubly warped form (same sphere dimension n-2) would put 2(n-2).
    # On the fully bent slice the difference is exactly
    # -4 beta' alpha' / (beta w), measured here rather than absorbed.
    eta = perfect_torpedo(1.0, math.pi)
    af = alpha_ordinate(eta)
    n, c = 5, 2.6
    grid = np.linspace(0.3, math.pi, 100)
    R_fam = bend_family_curvature(eta, _BentBandProfile(af, c), n, grid, 0.0)
    R_cyl = bent_cylinder_curvature(eta, c, n - 1, grid)
    C = eta.coeffs(grid, 2)
    w = c + af.eval(grid, 0)
    predicted = -4.0 * C[1] * af.eval(grid, 1) / (C[0] * w)
    assert np.max(np.abs((R_fam - R_cyl) - predicted)) <= 1e-8
    # alpha' <= 0 <= beta', so the 2n convention never hurts positivity.
    assert np.min(predicted) >= 0.0


def test_bend_family_term_signs():
    # On the bent band with a concave nondecreasing profile, the two
    # w-terms are individually nonnegative (w_r = alpha' <= 0 meets
    # beta' >= 0; w_rr = alpha'' <= 0), so they respect the coarse
    # lower bound -2n |beta'| / (c beta) used to choose c.
    eta = perfect_torpedo(1.0, math.pi)
    af = alpha_ordinate(eta)
    n, c = 5, 2.6
    grid = np.linspace(0.3, math.pi, 200)
    C = eta.coeffs(grid, 2)
    b0, b1 = C[0], C[1]
    A = af.coeffs(grid, 2)
    w, w_r, w_rr = c + A[0], A[1], 2.0 * A[2]
    term_mixed = -(2.0 * n / b0) * (b1 * w_r / w)
    term_second = -2.0 * w_rr / w
    assert np.min(term_mixed) >= -1e-12
    assert np.min(term_second) >= -1e-12
    bound = -2.0 * n * np.abs(b1) / (c * b0)
    assert np.all(term_mixed + term_second >= bound - 1e-12)


def test_bend_family_errors():
    eta = perfect_torpedo(1.0, math.pi)
    with pytest.raises(InvalidMetricError):
        bend_family_curvature(eta, _UnitProfile(), 2, 1.0, 0.0)

    class _Sub:
        def w_jets(self, r, t):
            z = np.zeros_like(r)
            return 0.5 * np.ones_like(r), z, z

    with pytest.raises(InvalidMetricError):
        bend_family_curvature(eta, _Sub(), 5, 1.0, 0.0)


def test_metric_descriptor_validation():
    eta = perfect_torpedo(1.0, math.pi)
    with pytest.raises(InvalidMetricError):
        RotSymMetric(kind="mystery", beta=eta, sphere_dim=3)
    with pytest.raises(InvalidMetricError):
        RotSymMetric.single_warped(None, 3)
    with pytest.raises(InvalidMetricError):
        RotSymMetric.doubly_warped(eta, None, 3)
    with pytest.raises(InvalidMetricError):
        RotSymMetric.product_with_line(None)


def test_certify_torpedo_neck_floor():
    eta = perfect_torpedo(1.0, math.pi)
    cert = certify_positive(RotSymMetric.single_warped(eta, 3))
    assert cert.passed
    # The minimum is the neck value (n-1)(n-2) = 6, attained just past
    # the cap-to-neck join.
    assert cert.min_R == pytest.approx(6.0, abs=1e-9)
    L = math.pi / 2
    assert L <= cert.argmin["r"] <= 1.1 * L
    assert cert.margin == pytest.approx(6.0 - POSITIVITY_FLOOR, abs=1e-9)


def test_certify_dimension_two_control_fails():
    eta = perfect_torpedo(1.0, math.pi)
    cert = certify_positive(RotSymMetric.single_warped(eta, 1))
    assert not cert.passed
    assert abs(cert.min_R) <= 1e-12  # R == -2 eta''/eta vanishes on the neck
    assert cert.margin < 0.0


def test_certify_convex_profile_fails():
    # beta = r (1 + r^2) is convex, so the -2(n-1) beta''/beta term drives
    # R negative despite the Euclidean-looking slope at 0.
    r = Affine(0.0, 1.0)
    convex = WarpFunction(1.0, Prod((r, Sum((Const(1.0), Prod((r, r)))))))
    cert = certify_positive(RotSymMetric.single_warped(convex, 3))
    assert not cert.passed
    assert cert.min_R < 0.0 and cert.margin < 0.0


def test_certify_round_bent_cylinder():
    # Doubly warped round bent cylinder at c = 2.05: psi = c + alpha as an
    # exact rep tree.  Minimum sits at the far pole, 12 - 8 cos/psi there.
    delta, n, c = 1.0, 4, 2.05
    beta = _round_profile(delta)
    b = beta.domain_end
    psi = WarpFunction(b, Sum((Const(c - math.cos(b)), Deriv(SinCap(delta)))))
    cert = certify_positive(RotSymMetric.doubly_warped(beta, psi, n - 1))
    assert cert.passed
    assert cert.min_R == pytest.approx(12.0 - 8.0 * 0.999995 / 2.05, abs=1e-3)


def test_certify_tie_breaks_to_first_grid_point():
    neck = WarpFunction(1.0, Const(0.5))
    cert = certify_positive(RotSymMetric.single_warped(neck, 3))
    assert cert.min_R == pytest.approx(24.0, abs=1e-12)
    assert cert.argmin["r"] == pytest.approx(GRID_EPS * 1.0, abs=1e-15)


def test_certify_product_with_line_delegates():
    eta = perfect_torpedo(1.0, math.pi)
    inner = RotSymMetric.single_warped(eta, 3)
    outer = RotSymMetric.product_with_line(inner)
    c1 = certify_positive(inner)
    c2 = certify_positive(outer)
    assert c2.passed and c2.min_R == pytest.approx(c1.min_R, abs=1e-15)


def test_certify_family_over_named_grid():
    grid = GridSpec((("r", 0.0, 1.0, 5), ("t", 0.0, 2.0, 5)))
    fam = CurvatureFamily(grid=grid, evaluator=lambda r, t: 1.0 + r + t)
    cert = certify_positive(fam)
    assert cert.passed
    assert cert.min_R == pytest.approx(1.0, abs=1e-15)
    assert cert.argmin == {"r": 0.0, "t": 0.0}


def test_grid_spec_validation():
    with pytest.raises(InvalidMetricError):
        GridSpec((("r", 0.0, 1.0, 0),))
    with pytest.raises(InvalidMetricError):
        GridSpec((("r", 1.0, 0.0, 8),))
