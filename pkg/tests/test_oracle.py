"""Finite-difference curvature engine: textbook charts and cross-checks."""

import math

import numpy as np
import pytest

from pscforge.curvature import RotSymMetric, scalar_curvature_single
from pscforge.errors import DegeneratePlaneError, InvalidMetricError, RangeError
from pscforge.oracle import (
    ChartMetric,
    chart_from_rotsym,
    concordance_chart,
    cross_check,
    euclidean_chart,
    fd_christoffels,
    fd_scalar_curvature,
    fd_sectional,
    stereographic_sphere_chart,
)
from pscforge.torpedo import perfect_torpedo
from pscforge.warp import SinCap, Sum, WarpFunction


def _polar_chart():
    def mat(pts):
        n = pts.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = pts[:, 0] ** 2
        return out

    return ChartMetric(2, mat, ((0.5, 2.0), (0.0, 2.0)), name="polar")


def _sphere2_chart():
    def mat(pts):
        n = pts.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = np.sin(pts[:, 0]) ** 2
        return out

    return ChartMetric(2, mat, ((0.4, math.pi - 0.4), (0.0, 2.0)), name="s2")


def test_euclidean_christoffels_vanish():
    chart = euclidean_chart(3)
    gamma = fd_christoffels(chart, [0.4, 0.5, 0.6])
    assert np.max(np.abs(gamma)) <= 1e-12


def test_polar_christoffels():
    gamma = fd_christoffels(_polar_chart(), [1.0, 0.7])
    assert gamma[0, 1, 1] == pytest.approx(-1.0, abs=1e-6)
    assert gamma[1, 0, 1] == pytest.approx(1.0, abs=1e-6)
    assert gamma[1, 1, 0] == pytest.approx(1.0, abs=1e-6)
    assert abs(gamma[0, 0, 0]) <= 1e-9


def test_sphere_christoffel_and_sectional():
    chart = _sphere2_chart()
    theta = 0.9
    gamma = fd_christoffels(chart, [theta, 1.0], h=5e-4)
    assert gamma[0, 1, 1] == pytest.approx(-math.sin(theta) * math.cos(theta), abs=1e-6)
    assert fd_sectional(chart, [theta, 1.0], 0, 1) == pytest.approx(1.0, abs=1e-4)
    assert fd_scalar_curvature(chart, [theta, 1.0]) == pytest.approx(2.0, abs=1e-4)


def test_normal_variant_where_chart_is_normalized():
    # At the equator of the polar sphere chart G = identity and all first
    # metric derivatives vanish, so the denominator-free variant applies.
    chart = _sphere2_chart()
    K = fd_sectional(chart, [math.pi / 2, 1.0], 0, 1, normal=True)
    assert K == pytest.approx(1.0, abs=1e-4)


def test_round_three_sphere_sectional_and_scalar():
    beta = WarpFunction(2.0 * math.pi * 0.999, SinCap(2.0))
    chart = chart_from_rotsym(RotSymMetric.single_warped(beta, 2))
    pt = np.array([2.0, math.pi / 2 - 0.1, math.pi / 2 + 0.2])
    assert fd_sectional(chart, pt, 0, 1) == pytest.approx(0.25, abs=1e-4)
    assert fd_sectional(chart, pt, 1, 2) == pytest.approx(0.25, abs=1e-4)
    assert fd_scalar_curvature(chart, pt) == pytest.approx(1.5, abs=1e-3)


def test_sectional_plane_symmetry_is_exact():
    beta = WarpFunction(2.0 * math.pi * 0.999, SinCap(2.0))
    chart = chart_from_rotsym(RotSymMetric.single_warped(beta, 2))
    pt = np.array([2.0, math.pi / 2 - 0.1, math.pi / 2 + 0.2])
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        assert fd_sectional(chart, pt, i, j) == fd_sectional(chart, pt, j, i)


def test_torpedo_neck_scalar():
    eta = perfect_torpedo(1.0, math.pi)
    chart = chart_from_rotsym(RotSymMetric.single_warped(eta, 2))
    pt = np.array([2.5, math.pi / 2 + 0.1, math.pi / 2 - 0.2])
    assert fd_scalar_curvature(chart, pt) == pytest.approx(2.0, abs=1e-4)


def test_stereographic_agrees_across_charts():
    # Same sphere, two unrelated charts: both engines must land on
    # R = n(n-1)/rho^2 = 1.5, hence on each other.
    stereo = stereographic_sphere_chart(2.0, 3)
    R_st = fd_scalar_curvature(stereo, [0.2, 0.3, 0.25])
    beta = WarpFunction(2.0 * math.pi * 0.999, SinCap(2.0))
    warped = chart_from_rotsym(RotSymMetric.single_warped(beta, 2))
    R_w = fd_scalar_curvature(warped, [2.0, math.pi / 2 - 0.1, math.pi / 2 + 0.2])
    assert R_st == pytest.approx(1.5, abs=1e-3)
    assert abs(R_st - R_w) <= 1e-3


def test_richardson_extrapolation_tightens():
    beta = WarpFunction(2.0 * math.pi * 0.999, SinCap(2.0))
    chart = chart_from_rotsym(RotSymMetric.single_warped(beta, 2))
    pt = np.array([2.0, math.pi / 2 - 0.1, math.pi / 2 + 0.2])
    plain = abs(fd_scalar_curvature(chart, pt) - 1.5)
    rich = abs(fd_scalar_curvature(chart, pt, richardson=True) - 1.5)
    assert rich < plain / 50.0
    assert rich <= 1e-8


def test_degenerate_plane_and_boundary_errors():
    chart = _sphere2_chart()
    with pytest.raises(DegeneratePlaneError):
        fd_sectional(chart, [0.9, 1.0], 1, 1)
    with pytest.raises(RangeError):
        fd_scalar_curvature(chart, [0.4001, 1.0])  # stencil would leave the box
    with pytest.raises(RangeError):
        fd_christoffels(chart, [5.0, 1.0])


def test_chart_helpers_validate_inputs():
    with pytest.raises(InvalidMetricError):
        chart_from_rotsym("not a metric")
    with pytest.raises(InvalidMetricError):
        concordance_chart(lambda r, t: r, 0, (0.1, 1.0), (0.0, 1.0))
    chart = euclidean_chart(2, extent=2.0)
    assert chart.default_step() == pytest.approx(2e-3, abs=1e-15)
    assert chart.check_positive_definite(np.array([[0.5, 0.5]]))

    def bad(pts):
        n = pts.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = -1.0
        return out

    lorentz = ChartMetric(2, bad, ((0.0, 1.0), (0.0, 1.0)), name="bad")
    assert not lorentz.check_positive_definite(np.array([[0.5, 0.5]]))


def test_product_with_line_chart_adds_flat_axis():
    eta = perfect_torpedo(1.0, math.pi)
    inner = RotSymMetric.single_warped(eta, 2)
    outer = RotSymMetric.product_with_line(inner)
    chart = chart_from_rotsym(outer)
    assert chart.dim == 4
    pt = np.array([2.5, math.pi / 2 + 0.1, math.pi / 2 - 0.2, 0.5])
    assert fd_scalar_curvature(chart, pt) == pytest.approx(2.0, abs=1e-4)


def test_concordance_chart_static_profile_matches_slice_formula():
    eta = perfect_torpedo(1.0, math.pi)
    chart = concordance_chart(lambda r, t: eta.eval(r, 0), 2, (0.4, 2.9), (0.0, 1.0))
    pt = np.array([1.1, math.pi / 2 - 0.1, math.pi / 2 + 0.15, 0.5])
    want = scalar_curvature_single(eta, 3, 1.1)
    assert fd_scalar_curvature(chart, pt) == pytest.approx(want, abs=1e-4)


def test_concordance_chart_slow_modulation_near_frozen_slice():
    # A 2% modulation in t moves the scalar curvature by O(2%): the
    # t-frozen slice formula predicts the FD value to a few percent.
    eta = perfect_torpedo(1.0, math.pi)
    chart = concordance_chart(
        lambda r, t: eta.eval(r, 0) * (1.0 + 0.02 * np.sin(t)),
        2, (0.4, 2.9), (0.0, 1.0),
    )
    t0 = 0.5
    pt = np.array([1.1, math.pi / 2 - 0.1, math.pi / 2 + 0.15, t0])
    s0 = 1.0 + 0.02 * math.sin(t0)
    frozen = scalar_curvature_single(
        WarpFunction(eta.domain_end, Sum((eta.rep,), (s0,))), 3, 1.1
    )
    got = fd_scalar_curvature(chart, pt)
    assert abs(got - frozen) / abs(frozen) <= 0.05


def test_cross_check_round_chart_passes_with_quadratic_ratio():
    cap = WarpFunction(math.pi / 2, SinCap(1.0))
    chart = chart_from_rotsym(RotSymMetric.single_warped(cap, 3), r_box=(0.5, 1.47))
    rng = np.random.default_rng(3)
    pts = np.column_stack(
        [rng.uniform(lo + 0.05, hi - 0.05, 40) for lo, hi in chart.box]
    )
    report = cross_check(
        lambda P: scalar_curvature_single(cap, 4, P[:, 0]), chart, pts, h=5e-4
    )
    assert report.passed, str(report)
    assert 3.0 <= report.ratio <= 5.0
    assert "PASS" in str(report)
    assert report.to_obj()["n_points"] == 40


def test_cross_check_flags_wrong_closed_form():
    # Mutation control: a closed form offset by a constant must fail and
    # lose the quadratic-convergence signature.
    cap = WarpFunction(math.pi / 2, SinCap(1.0))
    chart = chart_from_rotsym(RotSymMetric.single_warped(cap, 3), r_box=(0.5, 1.47))
    rng = np.random.default_rng(3)
    pts = np.column_stack(
        [rng.uniform(lo + 0.05, hi - 0.05, 12) for lo, hi in chart.box]
    )
    report = cross_check(lambda P: 14.0 + 0.0 * P[:, 0], chart, pts, h=5e-4)
    assert not report.passed
    assert report.max_abs_diff > 1.0
    assert not 3.0 <= report.ratio <= 5.0
