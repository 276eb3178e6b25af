import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from _oracles import (
    acf_reference,
    box_count_reference,
    hill_reference,
    pairwise_median_slope,
    periodogram_reference,
)
from slekit.diagnostics import (
    PsdEstimate,
    autocorrelation,
    box_counting_dimension,
    default_box_scales,
    default_fit_range,
    default_hill_n0,
    default_segment_length,
    hill_curve,
    hill_estimator,
    increments,
    kappa_from_dimension,
    loglog_slope,
    qq_against_normal,
    theil_sen,
    variance_growth,
    welch_psd,
)
from slekit.driving import CAPACITY, VIDEO, DrivingFunction
from slekit.errors import (
    BadScaleRange,
    DegenerateCloud,
    DegenerateSample,
    EmptySignal,
    InsufficientBins,
    NonpositivePower,
    OutOfRangeDimension,
    SegmentTooLong,
    ThresholdTooSmall,
    TooFewBins,
    TooFewPositive,
    TooShort,
)
from slekit.loewner import forward_solve
from slekit.synth import (
    RandomSource,
    brownian_driving,
    gaussian_samples,
    pareto_samples,
)


def synthetic_psd(freqs, powers, dt=1.0):
    f = np.asarray(freqs, dtype=float)
    p = np.asarray(powers, dtype=float)
    return PsdEstimate(f, p, 2 * f.size, 0.0, "boxcar", dt, 1,
                       float(p.mean()), float(p.mean()), 0.0)


# -- increments -----------------------------------------------------------------

def test_increments_single_segment():
    u = DrivingFunction([0.0, 1.0, 2.0], [0.0, 3.0, 5.0], CAPACITY)
    assert np.array_equal(increments(u), [3.0, 2.0])


def test_increments_skip_gaps():
    u = DrivingFunction([0.0, 1.0, 5.0, 6.0], [0.0, 1.0, 10.0, 12.0],
                        VIDEO, segments=((0, 2), (2, 4)))
    assert np.array_equal(increments(u), [1.0, 2.0])


def test_increments_too_short():
    u = DrivingFunction([0.0, 5.0], [0.0, 1.0], VIDEO,
                        segments=((0, 1), (1, 2)))
    with pytest.raises(TooShort):
        increments(u)


# -- Q-Q -------------------------------------------------------------------------

def test_qq_quantile_sequence_is_fixed_point():
    n = 500
    q = ndtri((np.arange(1, n + 1) - 0.5) / n)
    res = qq_against_normal(3.0 + 2.0 * q)
    assert res.max_deviation <= 1e-9
    assert res.loc == pytest.approx(3.0, abs=1e-9)
    assert res.scale == pytest.approx(2.0, abs=1e-9)


def test_qq_affine_invariant():
    x = RandomSource(50).normals(400)
    base = qq_against_normal(x).max_deviation
    moved = qq_against_normal(5.0 - 0.0 * x + 2.5 * x).max_deviation
    assert moved == pytest.approx(base, abs=1e-9)


def test_qq_separates_laws():
    g = qq_against_normal(gaussian_samples(1.0, 3000, RandomSource(60)))
    p = qq_against_normal(pareto_samples(1.5, 3000, RandomSource(61)))
    assert p.max_deviation > 5.0 * g.max_deviation


def test_qq_errors():
    with pytest.raises(TooShort):
        qq_against_normal([1.0, 2.0])
    with pytest.raises(DegenerateSample):
        qq_against_normal([2.0, 2.0, 2.0, 2.0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0), st.integers(0, 100))
def test_qq_deviation_affine_property(a, b, seed):
    x = RandomSource(seed).normals(64)
    d0 = qq_against_normal(x).max_deviation
    d1 = qq_against_normal(a * x + b).max_deviation
    assert d1 == pytest.approx(d0, rel=1e-6, abs=1e-9)


# -- autocorrelation ---------------------------------------------------------------

def test_acf_matches_direct_sum():
    x = RandomSource(1).normals(60)
    got = autocorrelation(x, 12)
    assert got[0] == 1.0
    assert np.allclose(got, acf_reference(x, 12), atol=1e-12)


def test_acf_alternating_series():
    x = np.resize([1.0, -1.0], 40)
    got = autocorrelation(x, 3)
    assert np.allclose(got, acf_reference(x, 3), atol=1e-12)
    assert got[1] < -0.9


def test_acf_errors():
    with pytest.raises(ValueError):
        autocorrelation([1.0, 2.0, 1.0], -1)
    with pytest.raises(TooShort):
        autocorrelation([1.0, 2.0, 1.0], 3)
    with pytest.raises(DegenerateSample):
        autocorrelation([2.0, 2.0, 2.0], 1)


# -- Welch PSD ----------------------------------------------------------------------

def test_default_segment_length_values():
    assert default_segment_length(2048) == 256
    assert default_segment_length(100) == 8
    assert default_segment_length(64) == 8
    assert default_segment_length(9000) == 1024


def test_welch_single_boxcar_segment_matches_periodogram():
    x = RandomSource(4).normals(64)
    est = welch_psd(x, dt=0.5, segment_length=64, overlap_fraction=0.0,
                    taper="boxcar")
    f_ref, p_ref = periodogram_reference(x, 0.5)
    assert est.n_segments == 1
    assert np.allclose(est.frequencies, f_ref, rtol=1e-12)
    assert np.allclose(est.powers, p_ref, rtol=1e-9, atol=1e-12)


def test_welch_parseval_and_density_normalization():
    x = RandomSource(8).normals(256)
    est = welch_psd(x, dt=2.0, segment_length=256, overlap_fraction=0.0,
                    taper="boxcar")
    assert est.parseval_rel_error <= 1e-9
    # one-sided density integrates to mean square minus the DC share
    df = est.frequencies[0]
    total = float(np.sum(est.powers) * df)
    assert total == pytest.approx(np.mean(x ** 2) - np.mean(x) ** 2, rel=1e-9)


def test_welch_segment_count_and_defaults():
    x = RandomSource(12).normals(1024)
    est = welch_psd(x, dt=1.0, segment_length=128)
    assert est.n_segments == 15  # 50% overlap, step 64
    assert est.window_name == "hann"
    est_default = welch_psd(x, dt=1.0)
    assert est_default.segment_length == default_segment_length(1024)


def test_welch_sine_peak_at_bin():
    dt = 1.0
    n, L = 512, 512
    k = 32
    t = np.arange(n) * dt
    x = np.sin(2 * np.pi * (k / (L * dt)) * t)
    est = welch_psd(x, dt, segment_length=L, overlap_fraction=0.0,
                    taper="boxcar")
    peak = est.frequencies[np.argmax(est.powers)]
    assert peak == pytest.approx(k / (L * dt), rel=1e-12)
    assert est.powers.max() > 1e3 * np.median(est.powers + 1e-300)


def test_welch_validation():
    x = np.ones(32)
    with pytest.raises(EmptySignal):
        welch_psd([], 1.0)
    with pytest.raises(ValueError):
        welch_psd(x, 0.0)
    with pytest.raises(SegmentTooLong):
        welch_psd(x, 1.0, segment_length=64)
    with pytest.raises(ValueError):
        welch_psd(x, 1.0, segment_length=24)  # not a power of two
    with pytest.raises(ValueError):
        welch_psd(x, 1.0, overlap_fraction=1.0)
    with pytest.raises(ValueError):
        welch_psd(x, 1.0, taper="kaiser")


def test_psd_estimate_refuses_parseval_violation():
    f = np.array([1.0, 2.0, 3.0])
    p = np.ones(3)
    with pytest.raises(ValueError):
        PsdEstimate(f, p, 8, 0.0, "boxcar", 1.0, 1, 1.0, 2.0, 1.0)


# -- slope fits ----------------------------------------------------------------------

def test_theil_sen_exact_line():
    x = np.arange(10.0)
    slope, intercept = theil_sen(x, 3.0 * x - 2.0)
    assert slope == 3.0
    assert intercept == -2.0


def test_theil_sen_matches_bruteforce_oracle():
    rng = np.random.default_rng(17)
    x = np.sort(rng.random(25) * 10)
    y = rng.normal(size=25)
    slope, _ = theil_sen(x, y)
    assert slope == pytest.approx(pairwise_median_slope(x, y), abs=1e-12)


def test_theil_sen_ignores_minority_corruption():
    x = np.arange(20.0)
    y = 2.0 * x + 1.0
    y[3] += 100.0
    y[11] -= 50.0
    slope, _ = theil_sen(x, y)
    assert slope == pytest.approx(2.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(0, 50))
def test_theil_sen_translation_equivariance(dx, dy, seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.random(12)) * 5
    y = rng.normal(size=12)
    s0, i0 = theil_sen(x, y)
    s1, i1 = theil_sen(x + dx, y + dy)
    assert s1 == pytest.approx(s0, rel=1e-9, abs=1e-9)
    assert i1 == pytest.approx(i0 + dy - s0 * dx, rel=1e-6, abs=1e-6)


def test_theil_sen_needs_two_points():
    with pytest.raises(ValueError):
        theil_sen([1.0], [2.0])


def test_loglog_slope_exact_power_law():
    f = np.linspace(0.01, 2.0, 200)
    est = synthetic_psd(f, 7.0 * f ** -1.8)
    fit = loglog_slope(est, fit_range=(f[0], f[-1]))
    assert fit.beta == pytest.approx(1.8, abs=1e-12)
    assert fit.method == "theil-sen"
    assert fit.n_bins == 200


def test_loglog_slope_default_range():
    f = np.linspace(0.01, 2.0, 200)
    est = synthetic_psd(f, f ** -2.0)
    lo, hi = default_fit_range(est)
    assert lo == f[2]
    assert hi == f[-1] / 10.0
    fit = loglog_slope(est)
    assert fit.fit_range == (lo, hi)
    assert fit.beta == pytest.approx(2.0, abs=1e-12)


def test_default_fit_range_fallback_when_sparse():
    f = np.array([1.0, 2.0, 4.0, 8.0])
    est = synthetic_psd(f, f ** -1.0)
    lo, hi = default_fit_range(est)
    assert hi == f[-1]  # top-decade cut would leave < 3 bins


def test_loglog_slope_robust_to_corrupt_bins():
    f = np.geomspace(0.01, 10.0, 100)
    p = f ** -2.0
    p[::10] *= 1e6  # 10 wrecked bins out of 100
    est = synthetic_psd(f, p)
    fit = loglog_slope(est, fit_range=(f[0], f[-1]))
    assert fit.beta == pytest.approx(2.0, abs=0.05)


def test_loglog_slope_validation():
    f = np.linspace(0.1, 1.0, 10)
    est = synthetic_psd(f, np.ones(10))
    with pytest.raises(ValueError):
        loglog_slope(est, fit_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        loglog_slope(est, fit_range=(0.5, 0.5))
    with pytest.raises(InsufficientBins):
        loglog_slope(est, fit_range=(0.1, 0.15))
    bad = synthetic_psd(f, np.concatenate([[0.0], np.ones(9)]))
    with pytest.raises(NonpositivePower):
        loglog_slope(bad, fit_range=(f[0], f[-1]))


def test_brownian_beta_near_two():
    drv = brownian_driving(1.0, 4096.0, 4096, RandomSource(999))
    est = welch_psd(drv.values, dt=1.0)
    fit = loglog_slope(est)
    assert 1.6 < fit.beta < 2.4


def test_white_noise_beta_near_zero():
    x = RandomSource(1001).normals(4096)
    fit = loglog_slope(welch_psd(x, dt=1.0))
    assert abs(fit.beta) < 0.3


# -- variance growth -------------------------------------------------------------------

def test_variance_growth_ramp_exactly_zero():
    # slope 3 keeps every value integer-exact, so lag differences cancel
    t = np.arange(30.0)
    u = DrivingFunction(t, 3.0 * t, VIDEO)
    vg = variance_growth(u, n_time_bins=5)
    assert vg.mode == "single-lag"
    assert np.all(vg.variances == 0.0)
    assert vg.slope == 0.0
    assert vg.kappa_estimate is None  # video time never estimates kappa


def test_variance_growth_single_capacity_sets_kappa():
    drv = brownian_driving(3.0, 100.0, 2000, RandomSource(2024))
    vg = variance_growth(drv, n_time_bins=8)
    assert vg.time_kind == CAPACITY
    assert vg.kappa_estimate == vg.slope
    assert 1.5 < vg.slope < 4.5  # single path, loose band


def test_variance_growth_respects_segments():
    # two segments; lag pairs never straddle the gap
    times = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0]
    vals = [0.0, 1.0, 0.0, 5.0, 6.0, 5.0]
    u = DrivingFunction(times, vals, VIDEO, segments=((0, 3), (3, 6)))
    vg = variance_growth(u, n_time_bins=2)
    # lag-1 increments: +-1 within each segment; elapsed always 1 frame
    assert vg.times[0] == 1.0
    assert vg.variances[0] == pytest.approx(np.var([1, -1, 1, -1], ddof=1))


def test_variance_growth_ensemble_estimates_kappa():
    members = [brownian_driving(2.0, 1.0, 128, RandomSource(3000 + i))
               for i in range(400)]
    vg = variance_growth(members, n_time_bins=10)
    assert vg.mode == "ensemble"
    assert 1.6 < vg.kappa_estimate < 2.4


def test_variance_growth_ensemble_validation():
    a = brownian_driving(1.0, 1.0, 16, RandomSource(1))
    b = brownian_driving(1.0, 2.0, 16, RandomSource(2))  # different grid
    with pytest.raises(ValueError):
        variance_growth([a, b])
    with pytest.raises(TooFewBins):
        variance_growth([a])
    with pytest.raises(TooFewBins):
        variance_growth(a, n_time_bins=1)


# -- Hill ---------------------------------------------------------------------------

def test_hill_matches_reference():
    x = pareto_samples(1.5, 400, RandomSource(46))
    got = hill_estimator(x, 40)
    assert got.alpha_hat == pytest.approx(hill_reference(x, 40), rel=1e-12)
    assert got.n0 == 40 and got.n == 400


def test_hill_recovers_pareto_exponent():
    x = pareto_samples(1.5, 20000, RandomSource(47))
    got = hill_estimator(x, 1000)
    assert 1.3 < got.alpha_hat < 1.7


def test_hill_gaussian_tail_is_thin():
    g = gaussian_samples(1.0, 20000, RandomSource(48))
    assert hill_estimator(g, 1000).alpha_hat > 2.5


def test_hill_scale_invariance_exact():
    x = pareto_samples(2.0, 500, RandomSource(49))
    a = hill_estimator(x, 50).alpha_hat
    b = hill_estimator(1000.0 * x, 50).alpha_hat
    assert a == b


def test_hill_ignores_zeros_and_sign():
    x = np.array([0.0, -5.0, 3.0, 0.0, -2.0] + list(range(1, 30)))
    with_zeros = hill_estimator(x, 12)
    cleaned = hill_estimator(np.abs(x[x != 0.0]), 12)
    assert with_zeros.alpha_hat == cleaned.alpha_hat


def test_default_hill_n0():
    assert default_hill_n0(100) == 10
    assert default_hill_n0(1000) == 50
    assert default_hill_n0(3) == 10


def test_hill_errors():
    x = pareto_samples(1.0, 100, RandomSource(51))
    with pytest.raises(ThresholdTooSmall):
        hill_estimator(x, 9)
    with pytest.raises(TooFewPositive):
        hill_estimator(np.zeros(50), 10)
    with pytest.raises(TooFewPositive):
        hill_estimator(x[:10], 10)
    with pytest.raises(DegenerateSample):
        hill_estimator(np.full(40, 7.0), 10)


def test_hill_curve_skips_bad_thresholds():
    x = pareto_samples(1.5, 100, RandomSource(52))
    results = hill_curve(x, [5, 20, 50, 99, 200])
    assert [r.n0 for r in results] == [20, 50, 99]


# -- box counting ----------------------------------------------------------------------

def line_points(n=2000):
    t = np.arange(n, dtype=float)
    return np.column_stack([t, 0.6 * t])


def test_box_counts_match_reference():
    pts = line_points(300)
    scales = np.geomspace(4.0, 70.0, 5)  # diam/4 = 74.75 caps the ladder
    est = box_counting_dimension(pts, scales)
    for s, c in zip(est.scales, est.counts):
        assert c == box_count_reference(pts, s)


def test_box_dimension_line_is_one():
    est = box_counting_dimension(line_points())
    assert est.D == pytest.approx(1.0, abs=0.05)
    assert est.flags == ()


def test_box_dimension_filled_square_is_two():
    g = np.arange(200.0)
    pts = np.column_stack([np.repeat(g, 200), np.tile(g, 200)])
    est = box_counting_dimension(pts, scales=np.geomspace(2.0, 49.0, 8))
    assert est.D == pytest.approx(2.0, abs=0.1)


def test_box_dimension_translation_invariant():
    pts = line_points(500)
    scales = np.geomspace(4.0, 60.0, 6)
    a = box_counting_dimension(pts, scales)
    b = box_counting_dimension(pts + [123.0, -77.0], scales)
    assert a.D == b.D
    assert np.array_equal(a.counts, b.counts)


def test_box_dimension_scale_invariant():
    pts = line_points(500)
    scales = np.geomspace(4.0, 60.0, 6)
    a = box_counting_dimension(pts, scales)
    b = box_counting_dimension(3.0 * pts, 3.0 * scales)
    assert np.array_equal(a.counts, b.counts)
    assert a.D == pytest.approx(b.D, abs=1e-12)


def test_box_accepts_complex_and_trace():
    drv = brownian_driving(2.0, 1.0, 400, RandomSource(58))
    tr = forward_solve(drv)
    scales = default_box_scales(tr.points)
    a = box_counting_dimension(tr, scales)
    b = box_counting_dimension(tr.points, scales)
    c = box_counting_dimension(
        np.column_stack([tr.points.real, tr.points.imag]), scales)
    assert a.D == b.D == c.D


def test_box_scale_range_enforced():
    pts = line_points(300)
    with pytest.raises(BadScaleRange):
        box_counting_dimension(pts, scales=[4.0, 8.0])  # too few
    with pytest.raises(BadScaleRange):
        box_counting_dimension(pts, scales=[4.0, 8.0, 16.0])  # < decade
    with pytest.raises(BadScaleRange):
        box_counting_dimension(pts, scales=[0.5, 5.0, 50.0])  # under spacing
    with pytest.raises(BadScaleRange):
        box_counting_dimension(pts, scales=[4.0, 40.0, 1e5])  # over diam/4
    with pytest.raises(BadScaleRange):
        box_counting_dimension(pts, scales=[40.0, 4.0, 400.0])  # not sorted
    with pytest.raises(DegenerateCloud):
        box_counting_dimension(np.zeros((5, 2)))


def test_default_box_scales_bounds():
    pts = line_points(2000)
    s = default_box_scales(pts)
    assert s.size == 8
    spacing = np.hypot(1.0, 0.6)
    assert s[0] == pytest.approx(2.0 * spacing, rel=1e-12)
    diam = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]))
    assert s[-1] == pytest.approx(diam / 4.0, rel=1e-12)
    with pytest.raises(BadScaleRange):
        default_box_scales(line_points(20))  # under a decade of room


def test_kappa_from_dimension():
    assert kappa_from_dimension(1.0) == 0.0
    assert kappa_from_dimension(1.5) == 4.0
    assert kappa_from_dimension(2.0) == 8.0
    g = np.arange(200.0)
    square = np.column_stack([np.repeat(g, 200), np.tile(g, 200)])
    est = box_counting_dimension(square, scales=np.geomspace(2.0, 49.0, 8))
    assert kappa_from_dimension(est) == 8.0 * (est.D - 1.0)
    with pytest.raises(OutOfRangeDimension):
        kappa_from_dimension(0.99)
    with pytest.raises(OutOfRangeDimension):
        kappa_from_dimension(2.01)
