"""Tests for measurements, growth fits, and certified inequality checks."""

import math

import numpy as np
import pytest

from pinchflow import (
    ContractError,
    DiagRecord,
    FitError,
    HypothesisError,
    MarkerField,
    ProfileSpec,
    StepControl,
    VelocityLaw,
    build_euler_profile,
    build_patch_profile,
    euler_default_spec,
    fit_growth,
    growth_discrimination,
    hyperbolic_approx_compare,
    lemma_bounds_check,
    lemma_decomposition,
    log_ratio_rate,
    patch_bounds,
    patch_default_spec,
    ratio_kernel,
    record,
    reference_integrate,
    run,
    support_bound_check,
    ux_bound_check,
    ux_calibration,
)
from pinchflow.diagnostics import (
    BOUND_I_CONST,
    BOUND_II_COEF,
    BOUND_III_CONST,
    DOUBLE_EXPONENTIAL,
    EXPONENTIAL,
    SERIES_COLUMNS,
    SUPPORT_RATE_FLOOR,
    _bound_iv,
    _tail_kernel_mass,
)
from pinchflow.profiles import build_comparison_profile


def synth_series(ts, ratio_fn=None, grad_fn=None, support_fn=None):
    rows = []
    for t in ts:
        ratio = ratio_fn(t) if ratio_fn else 2.0
        grad = grad_fn(t) if grad_fn else 1.0
        sup = support_fn(t) if support_fn else 1.0
        rows.append(DiagRecord(t=float(t), x1=1.0, x2=ratio, ratio=ratio,
                               log_ratio=math.log(ratio), grad_sup=grad,
                               support_D=sup, ux_sup=0.0, holder_half=0.0))
    return rows


def small_euler_run(n=256, t_end=10.0, recorder=record):
    prof = build_euler_profile(euler_default_spec(n_markers=n))
    ctl = StepControl(dt_init=0.05, cfl=0.5, dt_min=2e-3, eps_blowup=1e-308,
                      t_end=t_end)
    return run(prof, VelocityLaw.euler_log(), ctl, recorder=recorder)


def hand_field(half_pos, half_val, idx_x1=-1, idx_x2=-1):
    hp = np.asarray(half_pos, dtype=np.float64)
    hv = np.asarray(half_val, dtype=np.float64)
    pos = np.concatenate((-hp[:0:-1], hp))
    val = np.concatenate((-hv[:0:-1], hv))
    n = hp.shape[0] - 1
    return MarkerField(pos, val, t=0.0,
                       idx_x1=n + idx_x1 if idx_x1 >= 0 else -1,
                       idx_x2=n + idx_x2 if idx_x2 >= 0 else -1)


# ----------------------------------------------------------------------
# record
# ----------------------------------------------------------------------

class TestRecord:
    def test_initial_euler_profile(self):
        prof = build_euler_profile(euler_default_spec(n_markers=512))
        rec = record(prof)
        assert rec.t == 0.0
        assert rec.x1 == 1e-3
        assert rec.x2 == 0.5
        assert rec.ratio == 500.0
        assert rec.log_ratio == pytest.approx(math.log(500.0), rel=1e-14)
        # the rising section climbs to 1 over width x1_0
        assert rec.grad_sup >= 1.0 / 1e-3
        assert 0.5 < rec.support_D <= 1.0
        assert rec.ux_sup > 0.0
        assert rec.holder_half > 0.0

    def test_untracked_corners_are_nan(self):
        f = hand_field([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
        rec = record(f)
        assert math.isnan(rec.x1) and math.isnan(rec.x2)
        assert math.isnan(rec.ratio) and math.isnan(rec.log_ratio)
        assert rec.grad_sup == pytest.approx(2.0)
        assert rec.support_D == 0.5

    def test_zero_field(self):
        f = hand_field([0.0, 0.5, 1.0], [0.0, 0.0, 0.0])
        rec = record(f)
        assert rec.grad_sup == 0.0
        assert rec.support_D == 0.0
        assert rec.ux_sup == 0.0
        assert rec.holder_half == 0.0

    def test_ux_skip(self):
        prof = build_euler_profile(euler_default_spec(n_markers=256))
        assert record(prof, compute_ux=False).ux_sup == 0.0

    def test_row_matches_columns(self):
        prof = build_euler_profile(euler_default_spec(n_markers=256))
        rec = record(prof)
        row = rec.as_row()
        assert len(row) == len(SERIES_COLUMNS)
        assert row[0] == rec.t and row[3] == rec.ratio and row[-1] == rec.holder_half


# ----------------------------------------------------------------------
# growth fits
# ----------------------------------------------------------------------

class TestFitGrowth:
    def test_double_exponential_recovery(self):
        ts = np.linspace(0.0, 2.0, 41)
        ser = synth_series(ts, ratio_fn=lambda t: math.exp(3.0 * math.exp(0.7 * t)))
        fit = fit_growth(ser, "ratio", DOUBLE_EXPONENTIAL)
        c1, c2 = fit.params
        assert c2 == pytest.approx(0.7, rel=1e-6)
        assert fit.r_squared > 0.999999
        # amplitude refers to the window start
        t0 = fit.window[0]
        assert c1 == pytest.approx(3.0 * math.exp(0.7 * t0), rel=1e-6)

    def test_exponential_recovery(self):
        ts = np.linspace(0.0, 2.0, 41)
        ser = synth_series(ts, grad_fn=lambda t: 5.0 * math.exp(2.0 * t))
        fit = fit_growth(ser, "grad_sup", EXPONENTIAL)
        assert fit.params[1] == pytest.approx(2.0, rel=1e-6)
        assert fit.params[0] == pytest.approx(5.0 * math.exp(2.0 * fit.window[0]),
                                              rel=1e-6)
        assert fit.r_squared > 0.999999

    def test_time_translation_invariance(self):
        ts = np.linspace(0.0, 2.0, 41)
        f = lambda t: math.exp(2.0 * math.exp(0.9 * t))
        a = fit_growth(synth_series(ts, ratio_fn=f), "ratio", DOUBLE_EXPONENTIAL)
        shifted = synth_series(ts + 5.0, ratio_fn=lambda t: f(t - 5.0))
        b = fit_growth(shifted, "ratio", DOUBLE_EXPONENTIAL)
        assert b.params[1] == pytest.approx(a.params[1], rel=1e-9)
        assert b.params[0] == pytest.approx(a.params[0], rel=1e-9)
        assert b.r_squared == pytest.approx(a.r_squared, abs=1e-12)

    def test_explicit_window(self):
        ts = np.linspace(0.0, 4.0, 81)
        ser = synth_series(ts, grad_fn=lambda t: 5.0 * math.exp(2.0 * t))
        fit = fit_growth(ser, "grad_sup", EXPONENTIAL, window=(1.0, 2.0))
        assert fit.window == (1.0, 2.0)
        assert fit.params[1] == pytest.approx(2.0, rel=1e-9)

    def test_default_window_is_second_half(self):
        ts = np.linspace(0.0, 2.0, 41)
        ser = synth_series(ts, grad_fn=lambda t: math.exp(t))
        fit = fit_growth(ser, "grad_sup", EXPONENTIAL)
        assert fit.window[0] == pytest.approx(1.0)
        assert fit.window[1] == pytest.approx(2.0)

    def test_constant_series_degenerates_to_zero_slope(self):
        ser = synth_series(np.linspace(0.0, 1.0, 20), grad_fn=lambda t: 7.0)
        fit = fit_growth(ser, "grad_sup", EXPONENTIAL)
        assert fit.params[1] == 0.0
        assert fit.r_squared == 1.0

    def test_too_few_samples(self):
        ser = synth_series(np.linspace(0.0, 1.0, 10), grad_fn=lambda t: math.exp(t))
        with pytest.raises(FitError):
            fit_growth(ser, "grad_sup", EXPONENTIAL, window=(0.8, 1.0))

    def test_small_values_dropped_for_double_exponential(self):
        # values below e are unusable under the double-log transform
        ser = synth_series(np.linspace(0.0, 1.0, 30), ratio_fn=lambda t: 1.5)
        with pytest.raises(FitError):
            fit_growth(ser, "ratio", DOUBLE_EXPONENTIAL)

    def test_rejects_unknown_quantity_and_model(self):
        ser = synth_series(np.linspace(0.0, 1.0, 20))
        with pytest.raises(ContractError):
            fit_growth(ser, "support_D", EXPONENTIAL)
        with pytest.raises(ContractError):
            fit_growth(ser, "ratio", "Cubic")


class TestLogRatioRate:
    def test_exact_for_quadratic(self):
        # unevenly spaced times; the three-point formula is exact on quadratics
        ts = np.array([0.0, 0.1, 0.25, 0.3, 0.55, 0.6, 1.0])
        ser = [DiagRecord(t, 1, 1, 1, 1.0 + 2.0 * t + 3.0 * t * t, 1, 1, 0, 0)
               for t in ts]
        mid, rates = log_ratio_rate(ser)
        assert np.allclose(rates, 2.0 + 6.0 * mid, rtol=1e-12)

    def test_needs_three_records(self):
        ser = synth_series([0.0, 1.0])
        with pytest.raises(ContractError):
            log_ratio_rate(ser)


# ----------------------------------------------------------------------
# rate decomposition
# ----------------------------------------------------------------------

class TestLemmaDecomposition:
    def test_frozen_bound_constants(self):
        assert BOUND_I_CONST == pytest.approx(3.0 * math.log(3.0) + 2.0 * math.log(2.0),
                                              rel=1e-15)
        assert BOUND_II_COEF == pytest.approx(2.0 - 0.5 * math.log(3.0), rel=1e-15)

    def test_bound_iii_against_quadrature(self):
        val = reference_integrate(lambda s: ratio_kernel(s) / s, 0.5, 2.0,
                                  tol=1e-12, singular_points=[1.0])
        assert -val == pytest.approx(BOUND_III_CONST, abs=1e-12)

    @pytest.mark.parametrize("x1,x2", [
        (3e-3, 0.21), (1e-2, 0.4), (5e-15, 0.017), (1e-4, 0.45),
    ])
    def test_bound_iv_against_quadrature(self, x1, x2):
        num = reference_integrate(
            lambda y: (ratio_kernel(x2 / y) - ratio_kernel(x1 / y)) / y,
            2.0 * x2, 1.0, tol=1e-12)
        assert _bound_iv(x1, x2) == pytest.approx(num, abs=1e-10)
        assert _bound_iv(x1, x2) >= 0.0

    def test_bound_iv_zero_when_far_piece_empty(self):
        assert _bound_iv(1e-3, 0.5) == 0.0
        assert _bound_iv(1e-3, 0.7) == 0.0

    def test_tail_mass_closed_form(self):
        c, lo, hi = 0.03, 0.1, 1.0
        num = reference_integrate(lambda y: ratio_kernel(c / y) / y, lo, hi,
                                  tol=1e-12)
        assert _tail_kernel_mass(c, lo, hi) == pytest.approx(num, abs=1e-11)

    def test_initial_profile_decomposition(self):
        prof = build_euler_profile(euler_default_spec(n_markers=512))
        d = lemma_decomposition(prof)
        assert d.all_hold
        assert -1e-6 <= d.I <= d.bound_I + 1e-6
        assert d.II >= d.bound_II - 1e-6
        assert d.III >= d.bound_III - 1e-6
        assert abs(d.IV) <= d.bound_IV + 1e-6
        # plateau touching 2*x2 = 1 makes the far piece empty
        assert d.IV == 0.0 and d.bound_IV == 0.0
        assert d.total == d.I + d.II + d.III + d.IV

    def test_partition_matches_whole_integral(self):
        from pinchflow.fields import slope_jumps
        prof = build_euler_profile(euler_default_spec(n_markers=256))
        d = lemma_decomposition(prof)
        pos, val = prof.positions, prof.values
        nodes, _ = slope_jumps(pos, val)

        def f(y):
            if y <= 0.0 or y == d.x1 or y == d.x2:
                return 0.0
            w = float(np.interp(y, pos, val))
            if w == 0.0:
                return 0.0
            return (ratio_kernel(d.x1 / y) - ratio_kernel(d.x2 / y)) * w / y

        splits = sorted(set(nodes.tolist()) | {d.x1, d.x2})
        whole = reference_integrate(f, 0.0, 1.0, tol=1e-9, singular_points=splits)
        assert d.total == pytest.approx(whole, rel=1e-8)

    def test_rejects_small_separation(self):
        f = hand_field([0.0, 0.1, 0.2, 0.5, 0.8, 1.0],
                       [0.0, 0.5, 1.0, 1.0, 0.5, 0.0], idx_x1=2, idx_x2=3)
        with pytest.raises(HypothesisError, match="8"):
            lemma_decomposition(f)

    def test_rejects_wide_support(self):
        f = hand_field([0.0, 0.01, 0.5, 1.5, 2.0],
                       [0.0, 1.0, 1.0, 0.5, 0.0], idx_x1=1, idx_x2=2)
        with pytest.raises(HypothesisError, match="support"):
            lemma_decomposition(f)

    def test_rejects_values_above_one(self):
        f = hand_field([0.0, 0.01, 0.5, 1.0],
                       [0.0, 2.0, 2.0, 0.0], idx_x1=1, idx_x2=2)
        with pytest.raises(HypothesisError):
            lemma_decomposition(f)

    def test_rejects_untracked(self):
        f = hand_field([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
        with pytest.raises(ContractError):
            lemma_decomposition(f)


class TestLemmaBoundsCheck:
    def test_short_run_all_bounds_and_rate(self):
        traj = small_euler_run(n=256, t_end=0.4, recorder=None)
        rep = lemma_bounds_check(traj)
        assert rep.passed
        assert rep.info["snapshots_checked"] == len(traj.snapshots)
        names = {l.name for l in rep.lines}
        assert names == {"piece_I_nonnegative", "piece_I_upper", "piece_II_lower",
                         "piece_III_lower", "piece_IV_magnitude", "rate_consistency"}
        rate_lines = [l for l in rep.lines if l.name == "rate_consistency"]
        assert len(rate_lines) == len(traj.snapshots) - 2
        for l in rate_lines:
            assert abs(l.value - l.bound) <= 0.05 * abs(l.bound)


# ----------------------------------------------------------------------
# pinching-corner checks
# ----------------------------------------------------------------------

class TestPatchBounds:
    @pytest.fixture(scope="class")
    def patch_traj(self):
        prof = build_patch_profile(patch_default_spec(n_markers=512))
        ctl = StepControl(dt_init=0.02, cfl=0.5, dt_min=1e-5, eps_blowup=5e-3,
                          t_end=3.0)
        return run(prof, VelocityLaw.alpha_patch(0.5), ctl,
                   recorder=lambda s: record(s, compute_ux=False))

    def test_terminates_by_detection(self, patch_traj):
        assert patch_traj.termination == "BlowupX1"
        assert patch_traj.snapshots[-1].x1 < 5e-3

    def test_all_bounds_hold(self, patch_traj):
        rep = patch_bounds(patch_traj, gamma=0.5, M=8.0)
        assert rep.passed
        names = {l.name for l in rep.lines}
        assert {"corner_separation", "corner_pull", "corner_pull_refined",
                "power_decay", "pinch_monotone", "pinch_time",
                "pinch_detected"} == names
        assert rep.info["termination"] == "BlowupX1"
        assert rep.info["pinch_time_measured"] <= 1.1 * rep.info["pinch_time_bound"]

    def test_refined_pull_margins(self, patch_traj):
        rep = patch_bounds(patch_traj, gamma=0.5, M=8.0)
        for l in rep.lines:
            if l.name == "corner_pull_refined":
                assert l.margin >= -1e-8

    def test_rejects_bad_gamma(self, patch_traj):
        with pytest.raises(ContractError):
            patch_bounds(patch_traj, gamma=1.5, M=8.0)


# ----------------------------------------------------------------------
# support growth
# ----------------------------------------------------------------------

class TestSupportBound:
    def test_shrinking_support_trivially_passes(self):
        ts = np.linspace(0.0, 1.0, 11)
        ser = synth_series(ts, support_fn=lambda t: 1.0 - 0.3 * t)
        rep = support_bound_check(ser)
        assert rep.passed
        assert rep.info["constant"] == SUPPORT_RATE_FLOOR

    def test_moderate_growth_passes(self):
        ts = np.linspace(0.0, 1.0, 21)
        ser = synth_series(ts, support_fn=lambda t: math.exp(t))
        rep = support_bound_check(ser)
        assert rep.passed

    def test_violent_growth_fails(self):
        # a tame first step pins the constant to its floor; support then
        # doubling every hundredth of a time unit outruns D (|log D| + 1)
        ts = np.linspace(0.0, 0.2, 21)
        ser = synth_series(
            ts, support_fn=lambda t: math.exp(69.3 * max(0.0, t - 0.01)))
        rep = support_bound_check(ser)
        assert not rep.passed
        failed = [l for l in rep.lines if not l.passed]
        assert any(l.name == "support_growth_rate" for l in failed)

    def test_envelope_consistency(self):
        ts = np.linspace(0.0, 1.0, 11)
        ser = synth_series(ts, support_fn=lambda t: 1.0)
        rep = support_bound_check(ser)
        assert rep.info["envelope_consistency"] < 1e-6

    def test_expanding_run(self):
        # flipping the field's sign reverses every velocity law, turning the
        # contracting scenario into an expanding one
        prof = build_euler_profile(euler_default_spec(n_markers=256))
        flipped = MarkerField(prof.positions.copy(), -prof.values,
                              t=0.0, idx_x1=prof.idx_x1, idx_x2=prof.idx_x2)
        ctl = StepControl(dt_init=0.05, cfl=0.5, dt_min=1e-4,
                          eps_blowup=1e-308, t_end=0.5)
        traj = run(flipped, VelocityLaw.euler_log(), ctl,
                   recorder=lambda s: record(s, compute_ux=False))
        D = [r.support_D for r in traj.records]
        assert D[-1] > D[0]
        rep = support_bound_check(traj.records)
        assert rep.passed


# ----------------------------------------------------------------------
# gradient-transform bound
# ----------------------------------------------------------------------

class TestUxBound:
    def test_zero_field(self):
        f = hand_field([0.0, 0.5, 1.0], [0.0, 0.0, 0.0])
        rep = ux_bound_check(f, constant=4.0)
        assert rep.passed
        assert rep.lines[0].value == 0.0

    def test_calibration_point_passes(self):
        prof = build_euler_profile(euler_default_spec(n_markers=256))
        rep = ux_bound_check(prof)
        assert rep.passed
        assert rep.info["constant"] >= 4.0

    def test_frozen_constant_holds_late(self):
        traj = small_euler_run(n=256, recorder=None)
        cst = ux_calibration(traj.snapshots[0])
        for snap in (traj.snapshots[len(traj.snapshots) // 2], traj.snapshots[-1]):
            rep = ux_bound_check(snap, constant=cst)
            assert rep.passed, (snap.t, rep.lines[0])


# ----------------------------------------------------------------------
# model discrimination
# ----------------------------------------------------------------------

class TestDiscrimination:
    @pytest.fixture(scope="class")
    def comparison_runs(self):
        spec = ProfileSpec(x1_0=0.05, x2_0=0.45, M=9.0, support_bound=1.0,
                           n_markers=256)
        prof = build_comparison_profile(spec)
        ctl = StepControl(dt_init=0.05, cfl=0.5, dt_min=2e-3,
                          eps_blowup=1e-308, t_end=10.0)
        rec = lambda s: record(s, compute_ux=False)
        et = run(prof, VelocityLaw.euler_log(), ctl, recorder=rec)
        lt = run(prof, VelocityLaw.local(), ctl, recorder=rec)
        return et, lt

    def test_discrimination_passes(self, comparison_runs):
        et, lt = comparison_runs
        rep = growth_discrimination(et.records, lt.records)
        assert rep.passed
        byname = {l.name: l for l in rep.lines}
        assert byname["euler_double_exponential_rate"].value > 0.0
        assert byname["euler_double_exponential_fit"].value >= 0.98
        assert (byname["local_exponential_preferred"].value
                >= byname["local_exponential_preferred"].bound)

    def test_local_is_pure_exponential(self, comparison_runs):
        _, lt = comparison_runs
        fit = fit_growth(lt.records, "grad_sup", EXPONENTIAL)
        assert fit.r_squared > 1.0 - 1e-8

    def test_degenerate_series(self):
        ser = synth_series(np.linspace(0.0, 1.0, 20), grad_fn=lambda t: 3.0)
        rep = growth_discrimination(ser, ser)
        assert rep.passed
        assert rep.info["degenerate"]

    def test_empty_series_rejected(self):
        ser = synth_series(np.linspace(0.0, 1.0, 20))
        with pytest.raises(ContractError):
            growth_discrimination([], ser)


class TestHyperbolicCompare:
    def test_compare_on_small_profile(self):
        prof = build_euler_profile(euler_default_spec(n_markers=256))
        ctl = StepControl(dt_init=0.05, cfl=0.5, dt_min=2e-3,
                          eps_blowup=1e-308, t_end=10.0)
        rep = hyperbolic_approx_compare(prof, ctl)
        assert rep.passed
        assert not rep.info["degenerate"]
        assert rep.info["rate_ratio"] > 0.0
        assert math.isfinite(rep.info["rate_ratio"])

    def test_zero_profile_degenerate(self):
        f = hand_field([0.0, 0.5, 1.0], [0.0, 0.0, 0.0])
        rep = hyperbolic_approx_compare(f, StepControl(t_end=1.0))
        assert rep.passed
        assert rep.info["degenerate"]
