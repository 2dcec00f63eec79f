import json
import math

import numpy as np
import pytest

from pscforge.bend import (
    BootSpec,
    StepBase,
    StepSpec,
    bend_isotopy,
    bent_cylinder_metric,
    boot_isotopy,
    boot_metric,
    min_bend_radius,
    step_metric,
    step_retract,
    transition_profile,
)
from pscforge.curvature import (
    RotSymMetric,
    bend_family_curvature,
    bent_cylinder_curvature,
    certify_positive,
    scalar_curvature_single,
)
from pscforge.errors import ConstructionError, InvalidMetricError, RangeError
from pscforge.oracle import ChartMetric, chart_from_rotsym, fd_scalar_curvature
from pscforge.torpedo import alpha_ordinate, double_torpedo, perfect_torpedo
from pscforge.warp import Affine, SinCap, WarpFunction

HALF_PI = 0.5 * math.pi


def unit_torpedo(neck=1.0):
    return perfect_torpedo(1.0, HALF_PI + neck)


def quarter_round(delta=1.0):
    """Hemisphere slice profile: delta sin(r/delta) up to the equator."""
    return WarpFunction(delta * HALF_PI, SinCap(delta))


def bend_chart(eta, profile, n, r_box, t_box):
    """Coordinate chart for dr^2 + w(r,t)^2 dt^2 + beta^2 ds_{n-2}^2."""
    q = n - 2

    def mat(pts):
        N = pts.shape[0]
        g = np.zeros((N, 2 + q, 2 + q))
        g[:, 0, 0] = 1.0
        g[:, 1, 1] = profile(pts[:, 0], pts[:, 1]) ** 2
        b = eta.eval(pts[:, 0], 0)
        run = np.ones(N)
        for k in range(q):
            if k > 0:
                run = run * np.sin(pts[:, 1 + k]) ** 2
            g[:, 2 + k, 2 + k] = b**2 * run
        return g

    angle = (HALF_PI - 0.45, HALF_PI + 0.45)
    return ChartMetric(2 + q, mat, (r_box, t_box) + (angle,) * q, name="bend")


# ---------------------------------------------------------------------------
# Bent cylinders
# ---------------------------------------------------------------------------

def test_bent_cylinder_round_quarter_closed_form():
    delta, n, c = 1.0, 4, 2.05
    beta = quarter_round(delta)
    metric = bent_cylinder_metric(beta, c, n)
    rr = np.linspace(1e-3, delta * HALF_PI, 300)
    # the unit-speed ordinate of the quarter slice is delta cos(r/delta)
    assert np.max(np.abs(metric.psi.eval(rr, 0) - (c + delta * np.cos(rr / delta)))) <= 1e-9
    R = metric.scalar_curvature(rr)
    closed = n * (n - 1) / delta**2 + 2 * n * np.cos(rr / delta) / (
        delta * (c + delta * np.cos(rr / delta))
    )
    assert np.max(np.abs(R - closed)) <= 5e-9
    # independent jet route (quadrature alpha, no rep tree)
    assert np.max(np.abs(R - bent_cylinder_curvature(beta, c, n, rr))) <= 1e-9


def test_bent_cylinder_flat_profile_is_product():
    flat = WarpFunction(2.0, Affine(0.0, 1.0))
    metric = bent_cylinder_metric(flat, 5.0, 4)
    rr = np.linspace(2e-4, 2.0, 64)
    assert np.max(np.abs(metric.psi.eval(rr, 0) - 5.0)) == 0.0
    R = metric.scalar_curvature(rr)
    assert np.max(np.abs(R)) == 0.0


def test_bent_cylinder_double_torpedo_ordinate():
    c = 2.0
    prof = double_torpedo(perfect_torpedo(0.5, 2.0))
    metric = bent_cylinder_metric(prof, c, 4)
    alpha = alpha_ordinate(prof)
    gg = np.linspace(0.0, prof.domain_end, 400)
    psi = metric.psi.eval(gg, 0)
    assert abs(psi[0] - (c + alpha.eval(0.0, 0))) <= 1e-12
    assert abs(psi[-1] - c) <= 1e-12
    assert np.all(np.diff(psi) <= 1e-12)


def test_bent_cylinder_rejects_bad_input():
    beta = quarter_round()
    with pytest.raises(InvalidMetricError, match="invalid bend"):
        bent_cylinder_metric(beta, 2.0, 4)  # needs c > 2 max beta strictly
    with pytest.raises(InvalidMetricError):
        bent_cylinder_metric(beta, 3.0, 1)
    steep = WarpFunction(1.0, Affine(0.1, 1.2))
    with pytest.raises(InvalidMetricError):
        bent_cylinder_metric(steep, 10.0, 4)


def test_bent_cylinder_matches_fd_oracle():
    metric = bent_cylinder_metric(unit_torpedo(), 2.1, 4)
    chart = chart_from_rotsym(metric, r_box=(0.4, 1.4))
    rr = np.array([0.5, 0.8, 1.1, 1.3])
    angles = [np.full_like(rr, HALF_PI)] * 3
    pts = np.column_stack([rr] + angles + [np.full_like(rr, 0.5)])
    R_fd = fd_scalar_curvature(chart, pts, richardson=True)
    assert np.max(np.abs(R_fd - metric.scalar_curvature(rr))) <= 1e-6


# ---------------------------------------------------------------------------
# Minimal bend radius
# ---------------------------------------------------------------------------

def test_min_bend_radius_round_embedding_dominates():
    beta = WarpFunction(math.pi, SinCap(1.0))  # full sphere slice, delta = 1
    res = min_bend_radius(beta, 4)
    assert res.c_star == pytest.approx(2.000001318498928, rel=1e-12)
    assert res.embedding_floor == pytest.approx(2.0, abs=1e-5)
    assert res.c_star > res.embedding_floor
    assert res.c_star - res.embedding_floor < 1e-5
    # curvature alone would allow much smaller c; the embedding wins
    assert res.analytic_round_bound == pytest.approx(2.0 / 3.0, abs=1e-5)
    assert res.certificate.passed
    assert res.certificate.min_R == pytest.approx(8.000002928495618, rel=1e-9)
    assert len(res.search) == 21  # one doubling then twenty bisections
    assert res.search[0][1] is True


def test_min_bend_radius_dimension_sweep():
    beta = WarpFunction(math.pi, SinCap(1.0))
    res10 = min_bend_radius(beta, 10)
    assert res10.analytic_round_bound == pytest.approx(2.0 / 9.0, abs=1e-5)
    assert res10.c_star == pytest.approx(2.0, abs=1e-5)
    res3 = min_bend_radius(beta, 3)
    assert res3.c_star == pytest.approx(2.0, abs=1e-5)
    assert res3.c_star > res3.embedding_floor


def test_min_bend_radius_torpedo_profile():
    res = min_bend_radius(unit_torpedo(), 5)
    assert res.embedding_floor == pytest.approx(2.0, abs=1e-9)
    assert res.c_star == pytest.approx(2.0, abs=1e-5)
    assert res.certificate.passed
    again = min_bend_radius(unit_torpedo(), 5)
    assert again.c_star == res.c_star


def test_min_bend_radius_rejects_low_dimension():
    with pytest.raises(InvalidMetricError):
        min_bend_radius(quarter_round(), 2)


# ---------------------------------------------------------------------------
# Transition profiles
# ---------------------------------------------------------------------------

def test_transition_profile_zero_angle_is_flat():
    prof = transition_profile(0.0, HALF_PI, 2.1, alpha_ordinate(unit_torpedo()))
    assert prof.amplitude == 0.0
    rr = np.linspace(1e-3, unit_torpedo().domain_end, 33)
    assert np.max(np.abs(prof(rr, 0.1) - 1.0)) == 0.0


def test_transition_profile_full_bend_plateau_and_ends():
    eta = unit_torpedo()
    alpha = alpha_ordinate(eta)
    theta, L, c = HALF_PI, HALF_PI, 2.1
    prof = transition_profile(theta, L, c, alpha)
    assert prof.amplitude == 1.0  # theta >= theta0 carries the full bend
    rr = np.linspace(1e-3, eta.domain_end, 33)
    for t in (0.0, 0.4 * theta, theta):
        assert np.max(np.abs(prof(rr, t) - (c + alpha.eval(rr, 0)))) == 0.0
    for t in (-L, -0.95 * L, L + theta, L + theta - 0.02 * L):
        assert np.max(np.abs(prof(rr, t) - 1.0)) == 0.0
    partial = transition_profile(0.5 * prof.theta0, L, c, alpha)
    assert 0.0 < partial.amplitude < 1.0


def test_transition_profile_gradient_conditions_hold():
    eta = unit_torpedo()
    prof = transition_profile(HALF_PI, HALF_PI, 2.1, alpha_ordinate(eta))
    rr = np.linspace(1e-3, eta.domain_end, 201)
    tt = np.linspace(-prof.L, prof.L + prof.theta, 41)
    Rm, Tm = np.meshgrid(rr, tt, indexing="ij")
    w, w_r, w_rr = prof.w_jets(Rm.ravel(), Tm.ravel())
    assert np.min(w) >= 1.0
    assert np.max(np.abs(w_r)) <= 1.0 + 1e-9
    assert np.max(w_rr) <= 1e-9


def test_transition_profile_rejections():
    eta = unit_torpedo()
    alpha = alpha_ordinate(eta)
    with pytest.raises(ConstructionError, match="c \\+ alpha"):
        transition_profile(HALF_PI, HALF_PI, 0.5, alpha)
    # a full sphere slice's ordinate turns convex past the equator
    full = alpha_ordinate(WarpFunction(math.pi, SinCap(1.0)))
    with pytest.raises(ConstructionError, match="d2w/dr2"):
        transition_profile(HALF_PI, HALF_PI, 3.0, full)
    with pytest.raises(RangeError):
        transition_profile(1.1 * HALF_PI, HALF_PI, 2.1, alpha)
    with pytest.raises(ConstructionError):
        transition_profile(HALF_PI, 0.0, 2.1, alpha)
    prof = transition_profile(HALF_PI, HALF_PI, 2.1, alpha)
    with pytest.raises(RangeError):
        prof(0.5, prof.L + prof.theta + 0.1)


# ---------------------------------------------------------------------------
# Bend family curvature vs the finite-difference oracle
# ---------------------------------------------------------------------------

def test_bend_family_cross_term_measured_against_oracle():
    """The certification formula uses the printed -(2n/beta) beta_r w_r / w
    cross term; the general doubly warped computation gives 2(n-2), so the
    two differ by -4 beta_r w_r / (beta w).  The FD oracle sides with the
    general form; the difference is real but vanishes at the neck argmin,
    so both forms certify with the same margin."""
    n = 5
    eta = unit_torpedo()
    alpha = alpha_ordinate(eta)
    L = theta = HALF_PI
    prof = transition_profile(theta, L, 2.1, alpha)

    rs = np.array([0.4, 0.8, 1.2, 0.4, 0.8, 1.2])
    ts = np.array([-0.9, -0.9, -0.9, 0.5, 0.5, 0.5])  # rise zone and plateau
    chart = bend_chart(eta, prof, n, (0.25, 1.45), (-L, L + theta))
    pts = np.column_stack([rs, ts] + [np.full_like(rs, HALF_PI + s) for s in (0.1, -0.1, 0.15)])
    R_fd = fd_scalar_curvature(chart, pts, richardson=True)

    R_paper = bend_family_curvature(eta, prof, n, rs, ts)
    w, w_r, _ = prof.w_jets(rs, ts)
    b0, b1 = eta.eval(rs, 0), eta.eval(rs, 1)
    predicted_gap = -4.0 * b1 * w_r / (b0 * w)
    R_general = R_paper - predicted_gap

    assert np.max(np.abs(R_fd - R_general)) <= 1e-6
    assert np.max(np.abs((R_paper - R_fd) - predicted_gap)) <= 1e-6
    # the discrepancy is genuinely nonzero away from the neck ...
    assert np.min(R_paper - R_fd) >= 0.1
    # ... and nonnegative wherever beta_r w_r <= 0 (cap zone)
    assert np.min(predicted_gap) >= 0.0

    b = eta.domain_end
    rr = np.linspace(1e-4 * b, b, 96)
    tt = np.linspace(-L, L + theta, 33)
    Rm, Tm = np.meshgrid(rr, tt, indexing="ij")
    Rp = bend_family_curvature(eta, prof, n, Rm.ravel(), Tm.ravel())
    w, w_r, _ = prof.w_jets(Rm.ravel(), Tm.ravel())
    b0, b1 = eta.eval(Rm.ravel(), 0), eta.eval(Rm.ravel(), 1)
    Rg = Rp + 4.0 * b1 * w_r / (b0 * w)
    assert Rp.min() == pytest.approx(6.0, abs=1e-9)
    assert Rg.min() == pytest.approx(6.0, abs=1e-9)


# ---------------------------------------------------------------------------
# Bend isotopy
# ---------------------------------------------------------------------------

def test_bend_isotopy_zero_angle_matches_product():
    eta = unit_torpedo()
    sl = bend_isotopy(eta, 5, 2.1, 0.0)
    assert sl.certificate.passed
    rr = np.linspace(1e-3, eta.domain_end, 65)
    R = sl.curvature(rr, np.zeros_like(rr))
    assert np.max(np.abs(R - scalar_curvature_single(eta, 4, rr))) == 0.0
    assert sl.certificate.min_R == pytest.approx(6.0, abs=1e-9)


def test_bend_isotopy_full_family_certifies():
    eta = unit_torpedo()
    res = min_bend_radius(eta, 5)
    sl = bend_isotopy(eta, 5, 1.1 * res.c_star, HALF_PI)
    assert sl.certificate.passed
    assert sl.certificate.min_R == pytest.approx(6.0, abs=1e-9)
    am = dict(sl.certificate.argmin)
    assert set(am) == {"r", "t_frac", "theta"}
    # raising c cannot lower the curvature at the certified minimizer
    t_a = -sl.L + am["t_frac"] * (2.0 * sl.L + am["theta"])
    alpha = alpha_ordinate(eta)
    p1 = transition_profile(am["theta"], sl.L, sl.c, alpha)
    p2 = transition_profile(am["theta"], sl.L, 2.0 * sl.c, alpha)
    R1 = bend_family_curvature(eta, p1, 5, am["r"], t_a)
    R2 = bend_family_curvature(eta, p2, 5, am["r"], t_a)
    assert R2 >= R1 - 1e-12


def test_bend_isotopy_small_angle_partial_amplitude():
    eta = unit_torpedo()
    sl = bend_isotopy(eta, 5, 2.1, 0.05)
    assert 0.0 < sl.profile.amplitude < 1.0
    assert sl.certificate.passed


def test_bend_isotopy_round_slice_without_neck():
    sl = bend_isotopy(quarter_round(), 4, 2.05, HALF_PI, require_torpedo=False)
    assert sl.certificate.passed
    assert sl.certificate.min_R == pytest.approx(6.0, abs=1e-9)


def test_bend_isotopy_rejections():
    eta = unit_torpedo()
    with pytest.raises(InvalidMetricError, match="torpedo"):
        bend_isotopy(quarter_round(), 4, 2.05, HALF_PI)
    with pytest.raises(InvalidMetricError, match="embedding"):
        bend_isotopy(eta, 5, 1.9, HALF_PI)
    with pytest.raises(RangeError):
        bend_isotopy(eta, 5, 2.1, 1.8)
    with pytest.raises(InvalidMetricError):
        bend_isotopy(eta, 2, 2.1, HALF_PI)


def test_bend_isotopy_deterministic():
    eta = unit_torpedo()
    a = bend_isotopy(eta, 5, 2.1, HALF_PI)
    b = bend_isotopy(eta, 5, 2.1, HALF_PI)
    assert a.certificate.min_R == b.certificate.min_R
    assert a.certificate.argmin == b.certificate.argmin


# ---------------------------------------------------------------------------
# Boot metrics
# ---------------------------------------------------------------------------

def test_boot_spec_validation_and_defaults():
    spec = BootSpec(delta=1.0, l1=1.0, l2=1.0, c=2.1, n=5)
    assert spec.profile_domain == pytest.approx(HALF_PI + 1.0)
    assert spec.region_lengths["R1"] == pytest.approx(HALF_PI + 1.0)
    assert spec.region_lengths["R3"] == 1.0
    with pytest.raises(InvalidMetricError, match="c > 2 delta"):
        BootSpec(delta=1.0, l1=1.0, l2=1.0, c=2.0, n=5)
    with pytest.raises(InvalidMetricError):
        BootSpec(delta=1.0, l1=0.0, l2=1.0, c=2.1, n=5)
    with pytest.raises(InvalidMetricError):
        BootSpec(delta=1.0, l1=1.0, l2=-1.0, c=2.1, n=5)
    with pytest.raises(InvalidMetricError, match="n >= 4"):
        BootSpec(delta=1.0, l1=1.0, l2=1.0, c=2.1, n=3)


def test_boot_assembly_certifies_with_tight_interfaces():
    boot = boot_metric(BootSpec(delta=1.0, l1=1.0, l2=1.0, c=2.1, n=5))
    assert boot.passed
    assert {r.name for r in boot.regions} == {"R1", "R2", "R3", "R4"}
    for reg in boot.regions:
        assert reg.certificate.passed
    for ifc in boot.interfaces:
        assert ifc.passed
        assert max(ifc.value_mismatch, ifc.slope_mismatch) <= 1e-12
    assert {i.pair for i in boot.interfaces} == {"R1|R2", "R2|R3", "R3|R4"}
    # corner filler has the cylinder's constant curvature exactly
    assert boot.region("R4").certificate.min_R == pytest.approx(6.0, abs=1e-12)
    # leg is a product: same neck minimum as the toe cylinder
    assert boot.region("R3").certificate.min_R == pytest.approx(6.0, abs=1e-9)
    assert boot.join_width == pytest.approx(0.05 * 1.0)


def test_boot_trace_rows_and_serialization():
    spec = BootSpec(delta=1.0, l1=1.0, l2=1.0, c=2.1, n=5)
    boot = boot_metric(spec)
    rows = boot.trace_rows()
    names = {row[0] for row in rows}
    assert names == {"R1", "R2", "R3", "R4"}
    for name, r, t, R in rows:
        assert np.isfinite(R)
        if name == "R4":
            assert R == pytest.approx(6.0, abs=1e-12)
    blob = json.dumps(boot.to_obj(), sort_keys=True)
    again = json.dumps(boot_metric(spec).to_obj(), sort_keys=True)
    assert blob == again


def test_boot_isotopy_product_end_matches_plain_cylinder():
    sl = boot_isotopy(1.0, 1.0, 5, 0.0)
    assert sl.theta == 0.0
    eta = perfect_torpedo(1.0, HALF_PI + 1.0)
    plain = certify_positive(
        RotSymMetric.product_with_line(RotSymMetric.single_warped(eta, 3))
    )
    assert sl.certificate.min_R == plain.min_R
    assert sl.certificate.passed


def test_boot_isotopy_searches_sufficient_leg_length():
    sl = boot_isotopy(1.0, 1.0, 5, 1.0)
    assert sl.certificate.passed
    assert sl.l2_star == pytest.approx(4.100004004487632, rel=1e-9)
    drop = 2.1 + float(alpha_ordinate(perfect_torpedo(1.0, HALF_PI + 1.0)).eval(0.0, 0))
    assert sl.l2_star > drop
    assert sl.l2_star - drop < 1e-5
    assert sl.search[:4] == ((1.0, False), (2.0, False), (4.0, False), (8.0, True))
    assert sl.spec.l2 == sl.l2_star
    assert sl.theta == pytest.approx(HALF_PI)


def test_boot_isotopy_rejections():
    with pytest.raises(InvalidMetricError, match="n >= 4"):
        boot_isotopy(1.0, 1.0, 3, 0.5)
    with pytest.raises(RangeError):
        boot_isotopy(1.0, 1.0, 5, 1.2)


# ---------------------------------------------------------------------------
# Step metrics
# ---------------------------------------------------------------------------

def three_stage_spec():
    base = StepBase(delta=1.0, neck=1.0, length=40.0, n=5)
    return StepSpec(base=base, stages=((30.0, 1.0), (18.0, 1.0), (10.0, 1.0)))


def test_step_spec_validation():
    base = StepBase(delta=1.0, neck=1.0, length=40.0, n=5)
    with pytest.raises(ConstructionError, match="outside"):
        StepSpec(base=base, stages=((41.0, 1.0),))
    with pytest.raises(ConstructionError, match="progress"):
        StepSpec(base=base, stages=((30.0, 1.5),))
    with pytest.raises(ConstructionError, match="product zone"):
        StepSpec(base=base, stages=((30.0, 1.0), (28.0, 1.0)))
    with pytest.raises(ConstructionError, match="past t = 0"):
        StepSpec(base=base, stages=((1.0, 1.0),))
    with pytest.raises(InvalidMetricError):
        StepSpec(base=base, stages=(), c=1.5)
    with pytest.raises(InvalidMetricError):
        StepBase(delta=1.0, neck=1.0, length=40.0, n=3)
    assert StepSpec(base=base, stages=()).c == pytest.approx(2.1)


def test_step_metric_three_stage_staircase():
    sm = step_metric(three_stage_spec())
    assert sm.passed
    assert len(sm.stages) == 3
    for st in sm.stages:
        assert st.certificate.passed
        assert st.window_lo == st.product_zone_end
    assert sm.stages[0].window_lo == pytest.approx(30.0 - 1.5 * math.pi, rel=1e-12)
    assert float(sm.height(0.0)) == pytest.approx(12.30000085547421, rel=1e-9)
    assert float(sm.height(20.0)) == pytest.approx(4.10000028515807, rel=1e-9)
    assert float(sm.height(40.0)) == 0.0
    tt = np.linspace(0.0, 40.0, 801)
    hh = sm.height(tt)
    assert np.all(np.diff(hh) <= 1e-12)  # staircase descends toward t = 0
    rows = sm.height_rows(65)
    assert rows.shape == (65, 2)


def test_step_single_full_stage_matches_boot_bend():
    base = StepBase(delta=1.0, neck=1.0, length=12.0, n=5)
    spec = StepSpec(base=base, stages=((10.0, 1.0),))
    sm = step_metric(spec, grid_counts=(96, 33, 17))
    boot = boot_metric(BootSpec(delta=1.0, l1=1.0, l2=1.0, c=2.1, n=5))
    stage = sm.stages[0]
    assert stage.flank == pytest.approx(HALF_PI)  # same flank as the boot bend
    assert stage.certificate.min_R == boot.bend.certificate.min_R
    assert stage.certificate.argmin == boot.bend.certificate.argmin
    # identical transition profiles up to axis relabeling
    alpha = alpha_ordinate(sm.eta)
    prof = transition_profile(stage.theta, stage.flank, spec.c, alpha)
    rr = np.linspace(1e-3, sm.eta.domain_end, 65)
    tt = np.linspace(-HALF_PI, HALF_PI + stage.theta, 33)
    Rm, Tm = np.meshgrid(rr, tt, indexing="ij")
    diff = prof(Rm.ravel(), Tm.ravel()) - boot.bend.profile(Rm.ravel(), Tm.ravel())
    assert np.max(np.abs(diff)) <= 1e-8


def test_step_zero_stages_is_plain_cylinder():
    base = StepBase(delta=1.0, neck=1.0, length=8.0, n=5)
    sm = step_metric(StepSpec(base=base, stages=()))
    assert sm.passed
    assert sm.stages == ()
    tt = np.linspace(0.0, 8.0, 33)
    assert np.max(np.abs(sm.height(tt))) == 0.0


def test_step_retract_recovers_base_cylinder():
    spec = three_stage_spec()
    ret = step_retract(spec)
    assert ret.target == spec.base  # same delta and length, exactly
    assert ret.final_sup_difference <= 1e-8
    assert len(ret.checkpoints) == 7
    assert all(ok for _, ok in ret.checkpoints)
    mid = ret.path(0.5)
    staged = [s for _, s in mid.spec.stages]
    assert staged[0] == pytest.approx(1.0, abs=1e-12)
    assert staged[1] == pytest.approx(0.5, abs=1e-12)
    assert staged[2] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(RangeError):
        ret.path(1.2)


def test_step_retract_zero_stages_identity():
    base = StepBase(delta=1.0, neck=1.0, length=8.0, n=5)
    spec = StepSpec(base=base, stages=())
    ret = step_retract(spec)
    assert ret.target == base
    assert ret.final_sup_difference == 0.0
    assert ret.path(0.7).spec.stages == ()


def test_step_retract_accepts_built_metric():
    base = StepBase(delta=1.0, neck=1.0, length=12.0, n=5)
    spec = StepSpec(base=base, stages=((10.0, 0.6),))
    ret = step_retract(step_metric(spec))
    assert ret.target == base
    assert ret.final_sup_difference <= 1e-8
    assert all(ok for _, ok in ret.checkpoints)
