"""Statistical battery for driving functions and point sets.

Estimators: increment extraction, normal Q-Q deviation, Welch power
spectral density with Parseval bookkeeping, robust log-log spectral slope
(Theil-Sen), autocorrelation, variance growth, Hill tail exponent,
box-counting dimension, and the dimension-to-kappa map kappa = 8(D - 1).

Everything here is pure and deterministic; random inputs come from
synth. Estimator defaults (Welch segmentation, fit ranges, Hill
threshold, box-scale ladder) are encoded in the default_* helpers so the
pipeline, the CLI, and the tests share one definition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .driving import CAPACITY, DrivingFunction
from .errors import (
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

PARSEVAL_TOL = 1e-9

_TAPERS = ("hann", "hamming", "boxcar")


# -- result containers -------------------------------------------------------

@dataclass(frozen=True)
class PsdEstimate:
    """One-sided Welch PSD with per-segment Parseval bookkeeping.

    powers[k] estimates the spectral density (signal^2 * seconds) at
    frequencies[k]; the zero-frequency bin is never included. mean_square
    and parseval_power are per-segment averages of the tapered signal's
    mean square and of the raw periodogram total; their agreement
    (parseval_rel_error, the worst segment) is enforced at 1e-9.
    """

    frequencies: np.ndarray
    powers: np.ndarray
    segment_length: int
    overlap_fraction: float
    window_name: str
    dt: float
    n_segments: int
    mean_square: float
    parseval_power: float
    parseval_rel_error: float

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=np.float64)
        p = np.asarray(self.powers, dtype=np.float64)
        if f.ndim != 1 or f.shape != p.shape:
            raise ValueError("frequencies and powers must be equal-length 1-D")
        if f.size and (f[0] <= 0 or np.any(np.diff(f) <= 0)):
            raise ValueError("frequencies must be strictly increasing and positive")
        if np.any(p < 0):
            raise ValueError("powers must be nonnegative")
        if not self.parseval_rel_error <= PARSEVAL_TOL:
            raise ValueError(
                f"Parseval bookkeeping off by {self.parseval_rel_error:g} "
                f"(budget {PARSEVAL_TOL:g})")
        f.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "powers", p)


@dataclass(frozen=True)
class SlopeFit:
    """Robust log-log line: ln P = -beta ln w + intercept."""

    beta: float
    intercept: float
    fit_range: tuple
    method: str = "theil-sen"
    n_bins: int = 0

    def __post_init__(self):
        if not np.isfinite(self.beta):
            raise ValueError("fitted beta must be finite")


@dataclass(frozen=True)
class HillResult:
    """Hill tail exponent at threshold order n0 out of n samples."""

    alpha_hat: float
    n0: int
    n: int

    def __post_init__(self):
        if not (1 <= self.n0 < self.n):
            raise ValueError("need 1 <= n0 < n")
        if not self.alpha_hat > 0:
            raise ValueError("alpha_hat must be positive")


@dataclass(frozen=True)
class DimensionEstimate:
    """Box-counting dimension with its scale ladder and raw counts.

    flags record soft violations ("counts_not_monotone",
    "dimension_out_of_range") instead of failing the estimate.
    """

    D: float
    scales: np.ndarray
    counts: np.ndarray
    fit_residual: float
    flags: tuple = ()

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=np.float64)
        c = np.asarray(self.counts, dtype=np.int64)
        s.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "scales", s)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "flags", tuple(self.flags))


@dataclass(frozen=True)
class QqResult:
    """Normal Q-Q pairing after probability-plot standardization."""

    theoretical: np.ndarray
    empirical: np.ndarray
    max_deviation: float
    loc: float
    scale: float


@dataclass(frozen=True)
class VarianceGrowth:
    """Variance-vs-time curve and its linear fit.

    mode is "ensemble" (variance across members of U_t - U_0) or
    "single-lag" (variance of same-segment increments grouped by lag).
    kappa_estimate is only set for capacity-time input; in video time the
    slope is indicative only and never an estimate of kappa.
    """

    times: np.ndarray
    variances: np.ndarray
    slope: float
    intercept: float
    mode: str
    time_kind: str
    kappa_estimate: float | None


# -- basic series ops --------------------------------------------------------

def increments(u: DrivingFunction) -> np.ndarray:
    """First differences of the driving values, within segments only.

    Differencing across a gap would fabricate an increment spanning
    unobserved time, so gaps contribute nothing. Single-segment input of
    length N gives the usual N-1 differences.
    """
    parts = [np.diff(v) for _, v in u.segment_arrays() if v.size >= 2]
    if not parts:
        raise TooShort("no contiguous segment has >= 2 samples")
    return np.concatenate(parts)


def qq_against_normal(x) -> QqResult:
    """Standardized sample quantiles against normal quantiles.

    Plotting positions (i - 0.5)/n. Standardization is the probability
    plot's own line: OLS of sorted sample on theoretical quantiles, so an
    input that IS the quantile sequence (any affine image of it) is a
    fixed point and deviates only at rounding level. max_deviation is the
    sup distance from the 45-degree line after standardization.
    """
    xs = np.sort(np.asarray(x, dtype=np.float64))
    n = xs.size
    if n < 3:
        raise TooShort(f"Q-Q needs >= 3 samples, got {n}")
    if xs[0] == xs[-1]:
        raise DegenerateSample("sample has zero spread")
    q = ndtri((np.arange(1, n + 1) - 0.5) / n)
    qbar = q.mean()
    scale = float(np.dot(q - qbar, xs) / np.dot(q - qbar, q - qbar))
    if scale <= 0:
        raise DegenerateSample("degenerate probability-plot slope")
    loc = float(xs.mean() - scale * qbar)
    emp = (xs - loc) / scale
    return QqResult(q, emp, float(np.max(np.abs(emp - q))), loc, scale)


def autocorrelation(dx, max_lag: int) -> np.ndarray:
    """Biased normalized autocorrelation, lags 0..max_lag; acf[0] == 1."""
    x = np.asarray(dx, dtype=np.float64)
    n = x.size
    lag = int(max_lag)
    if lag < 0:
        raise ValueError("max_lag must be >= 0")
    if lag >= n:
        raise TooShort(f"max_lag {lag} needs more than {n} samples")
    c = x - x.mean()
    denom = float(np.dot(c, c))
    if denom == 0.0:
        raise DegenerateSample("zero-variance series has no autocorrelation")
    out = np.empty(lag + 1)
    out[0] = 1.0
    for ell in range(1, lag + 1):
        out[ell] = float(np.dot(c[:-ell], c[ell:])) / denom
    return out


# -- Welch PSD ---------------------------------------------------------------

def default_segment_length(n: int) -> int:
    """Largest power of two <= n/8, floored at 8."""
    target = max(8, n // 8)
    return 1 << (int(target).bit_length() - 1)


def _taper(name: str, length: int) -> np.ndarray:
    j = np.arange(length)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * j / length)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * j / length)
    if name == "boxcar":
        return np.ones(length)
    raise ValueError(f"taper must be one of {_TAPERS}")


def welch_psd(x, dt: float, segment_length: int | None = None,
              overlap_fraction: float = 0.5, taper: str = "hann") -> PsdEstimate:
    """One-sided Welch power spectral density.

    Parameters
    ----------
    x : array
        Real signal.
    dt : float
        Sample spacing in seconds.
    segment_length : int, optional
        Power of two, <= len(x); default is the largest power of two
        <= n/8 (at least 8).
    overlap_fraction : float
        In [0, 1); 0.5 is the conventional default.
    taper : str
        "hann" (default), "hamming", or "boxcar"; periodic form.

    Returns
    -------
    PsdEstimate
        Density-scaled averaged periodogram, zero-frequency bin dropped.
        Per segment, the raw periodogram total sum_k |Y_k|^2 / L^2 over
        all L bins is checked against the tapered segment's mean square
        (Parseval); the construction refuses estimates off by > 1e-9.
    """
    sig = np.asarray(x, dtype=np.float64)
    if sig.ndim != 1 or sig.size == 0:
        raise EmptySignal("welch_psd needs a nonempty 1-D signal")
    if not dt > 0:
        raise ValueError("dt must be positive seconds")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap_fraction must lie in [0, 1)")
    n = sig.size
    L = default_segment_length(n) if segment_length is None else int(segment_length)
    if L > n:
        raise SegmentTooLong(f"segment length {L} exceeds signal length {n}")
    if L < 2 or L & (L - 1):
        raise ValueError("segment_length must be a power of two >= 2")

    w = _taper(taper, L)
    w_power = float(np.dot(w, w))
    step = max(1, int(round(L * (1.0 - overlap_fraction))))
    half = L // 2

    acc = np.zeros(half + 1)
    n_seg = 0
    ms_sum = 0.0
    raw_sum = 0.0
    worst = 0.0
    for s0 in range(0, n - L + 1, step):
        y = w * sig[s0:s0 + L]
        spec = np.abs(np.fft.rfft(y)) ** 2
        # two-sided total over all L bins, folded onto the rfft layout
        raw_total = (spec[0] + 2.0 * spec[1:half].sum() + spec[half]) / (L * L)
        msq = float(np.dot(y, y)) / L
        err = abs(raw_total - msq) / msq if msq > 0 else 0.0
        worst = max(worst, err)
        ms_sum += msq
        raw_sum += raw_total
        acc += spec
        n_seg += 1

    acc /= n_seg
    powers = acc * (dt / w_power)
    powers[1:half] *= 2.0  # one-sided fold, Nyquist and DC excluded
    freqs = np.arange(1, half + 1) / (L * dt)
    return PsdEstimate(freqs, powers[1:], L, float(overlap_fraction), taper,
                       float(dt), n_seg, ms_sum / n_seg, raw_sum / n_seg, worst)


# -- robust log-log slope ----------------------------------------------------

def theil_sen(x, y) -> tuple:
    """All-pairs median slope and median intercept.

    Returns (slope, intercept) with slope = median over every pair i < j
    of (y_j - y_i)/(x_j - x_i) and intercept = median(y - slope x).
    Deterministic; breaks only if two x values coincide.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    n = xa.size
    if n < 2:
        raise ValueError("theil_sen needs >= 2 points")
    slopes = np.concatenate([
        (ya[i + 1:] - ya[i]) / (xa[i + 1:] - xa[i]) for i in range(n - 1)
    ])
    slope = float(np.median(slopes))
    intercept = float(np.median(ya - slope * xa))
    return slope, intercept


def default_fit_range(psd: PsdEstimate) -> tuple:
    """Drop the 2 lowest bins (finite size) and the top decade (floor)."""
    f = psd.frequencies
    if f.size < 3:
        return (float(f[0]), float(f[-1])) if f.size else (0.0, 0.0)
    lo = float(f[2])
    hi = float(f[-1] / 10.0)
    if np.count_nonzero((f >= lo) & (f <= hi)) < 3:
        hi = float(f[-1])
    return lo, hi


def loglog_slope(psd: PsdEstimate, fit_range: tuple | None = None) -> SlopeFit:
    """Theil-Sen fit of ln P against ln w; beta = -slope.

    fit_range defaults to default_fit_range(psd) and must lie within the
    estimate's frequency support.
    """
    if fit_range is None:
        fit_range = default_fit_range(psd)
    lo, hi = (float(v) for v in fit_range)
    if not 0.0 < lo < hi:
        raise ValueError(f"bad fit range ({lo}, {hi})")
    f = psd.frequencies
    # stored endpoints stay within the frequency support
    lo, hi = max(lo, float(f[0])), min(hi, float(f[-1]))
    mask = (f >= lo) & (f <= hi)
    if int(mask.sum()) < 3:
        raise InsufficientBins(
            f"{int(mask.sum())} bins in ({lo:g}, {hi:g}); need >= 3")
    p = psd.powers[mask]
    if np.any(p <= 0):
        raise NonpositivePower("log-log fit needs strictly positive powers")
    slope, intercept = theil_sen(np.log(f[mask]), np.log(p))
    return SlopeFit(-slope, intercept, (lo, hi), "theil-sen", int(mask.sum()))


# -- variance growth ---------------------------------------------------------

def variance_growth(u, n_time_bins: int = 10) -> VarianceGrowth:
    """Variance of driving displacements versus elapsed time.

    Single DrivingFunction: increments U_{i+l} - U_i are grouped by lag l
    (same segment only) for l = 1..n_time_bins; the curve is the sample
    variance per lag against the mean elapsed time per lag. A deterministic
    ramp on a uniform grid gives exactly zero variance at every lag.

    Sequence of DrivingFunction on a common time grid: ensemble variance
    of U_t - U_0 across members, binned into n_time_bins time bins.

    The fitted slope estimates kappa only for capacity-time input.
    """
    bins = int(n_time_bins)
    if bins < 2:
        raise TooFewBins("variance growth needs >= 2 bins")
    if isinstance(u, DrivingFunction):
        return _variance_growth_single(u, bins)
    members = list(u)
    if len(members) < 2:
        raise TooFewBins("ensemble mode needs >= 2 members")
    return _variance_growth_ensemble(members, bins)


def _fit_line(t, v):
    slope, intercept = np.polyfit(t, v, 1)
    return float(slope), float(intercept)


def _variance_growth_single(u: DrivingFunction, bins: int) -> VarianceGrowth:
    lag_times, lag_vars = [], []
    max_lag = min(bins, max(b - a for a, b in u.segments) - 1)
    for ell in range(1, max_lag + 1):
        dts, dvs = [], []
        for t, v in u.segment_arrays():
            if v.size > ell:
                dts.append(t[ell:] - t[:-ell])
                dvs.append(v[ell:] - v[:-ell])
        if not dvs:
            continue
        dv = np.concatenate(dvs)
        if dv.size < 2:
            continue
        lag_times.append(float(np.concatenate(dts).mean()))
        lag_vars.append(float(np.var(dv, ddof=1)))
    if len(lag_vars) < 2:
        raise TooFewBins(f"only {len(lag_vars)} usable lags; need >= 2")
    t = np.array(lag_times)
    v = np.array(lag_vars)
    slope, intercept = _fit_line(t, v)
    kap = slope if u.time_kind == CAPACITY else None
    return VarianceGrowth(t, v, slope, intercept, "single-lag", u.time_kind, kap)


def _variance_growth_ensemble(members, bins: int) -> VarianceGrowth:
    t0 = members[0].times
    kind = members[0].time_kind
    for m in members[1:]:
        if m.time_kind != kind:
            raise ValueError("ensemble members must share one time_kind")
        if m.times.shape != t0.shape or not np.allclose(m.times, t0, rtol=0, atol=1e-9 * max(1.0, abs(t0[-1]))):
            raise ValueError("ensemble members must share a common time grid")
    vals = np.stack([m.values for m in members])
    dev = vals - vals[:, :1]
    var_t = np.var(dev, axis=0, ddof=1)

    chunks = np.array_split(np.arange(t0.size), bins)
    bt, bv = [], []
    for idx in chunks:
        if idx.size == 0:
            continue
        bt.append(float(t0[idx].mean()))
        bv.append(float(var_t[idx].mean()))
    if len(bv) < 2:
        raise TooFewBins(f"only {len(bv)} usable bins; need >= 2")
    t = np.array(bt)
    v = np.array(bv)
    slope, intercept = _fit_line(t, v)
    kap = slope if kind == CAPACITY else None
    return VarianceGrowth(t, v, slope, intercept, "ensemble", kind, kap)


# -- Hill tail exponent ------------------------------------------------------

def default_hill_n0(n: int) -> int:
    """Threshold order: 5% of the sample, never below 10."""
    return max(10, math.ceil(0.05 * n))


def hill_estimator(x, n0: int) -> HillResult:
    """Hill tail-exponent estimate at threshold order n0.

    With X^(1) >= X^(2) >= ... the descending order statistics of |x|
    (zeros discarded), returns

        alpha_hat = (n0 + 1) / sum_{k=1..n0} ln(X^(k) / X^(n0+1)).

    Scale-invariant by construction: the ratios cancel any c > 0.
    """
    n0 = int(n0)
    if n0 < 10:
        raise ThresholdTooSmall(f"n0 = {n0} < 10")
    a = np.abs(np.asarray(x, dtype=np.float64))
    n = a.size
    a = np.sort(a[a > 0])[::-1]
    if n0 + 1 > a.size:
        raise TooFewPositive(
            f"n0 + 1 = {n0 + 1} exceeds {a.size} strictly positive values")
    denom = float(np.sum(np.log(a[:n0] / a[n0])))
    if denom <= 0.0:
        raise DegenerateSample("top order statistics carry no spread")
    return HillResult((n0 + 1) / denom, n0, n)


def hill_curve(x, n0_values) -> list:
    """Hill estimates over a ladder of thresholds (for plateau inspection)."""
    out = []
    for n0 in n0_values:
        try:
            out.append(hill_estimator(x, n0))
        except (ThresholdTooSmall, TooFewPositive, DegenerateSample):
            continue
    return out


# -- box counting ------------------------------------------------------------

def _as_points(points) -> np.ndarray:
    """Accept Trace, Contour, complex array, or (n, 2) array."""
    pts = getattr(points, "points", points)
    pts = np.asarray(pts)
    if np.iscomplexobj(pts):
        pts = np.column_stack([pts.real, pts.imag])
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must reduce to an (n, 2) array")
    return pts


def _point_spacing(pts: np.ndarray) -> float:
    """Median nonzero consecutive distance (sequence order)."""
    d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    d = d[d > 0]
    return float(np.median(d)) if d.size else 0.0


def default_box_scales(points, n_scales: int = 8) -> np.ndarray:
    """Geometric ladder from 2x the median point spacing to diameter/4."""
    pts = _as_points(points)
    spacing = _point_spacing(pts)
    diam = float(max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1])))
    if spacing <= 0 or diam <= 0:
        raise BadScaleRange("cannot derive scales from a degenerate cloud")
    lo, hi = 2.0 * spacing, diam / 4.0
    if hi < 10.0 * lo:
        raise BadScaleRange(
            f"default ladder {lo:g}..{hi:g} spans under a decade")
    return np.geomspace(lo, hi, int(n_scales))


def box_counting_dimension(points, scales=None) -> DimensionEstimate:
    """Box-counting dimension of a planar point set.

    Grids are anchored at the bounding-box corner. Scales must be
    increasing, span at least a decade over >= 3 values, and respect
    2 x point spacing <= scale <= diameter/4 (BadScaleRange otherwise);
    scales=None uses default_box_scales. D is minus the Theil-Sen slope
    of log count against log scale. Nonmonotone counts and D outside
    (0, 2] are flagged, not fatal.
    """
    pts = _as_points(points)
    if np.unique(pts, axis=0).shape[0] < 2:
        raise DegenerateCloud("box counting needs >= 2 distinct points")
    if scales is None:
        scales = default_box_scales(pts)
    s = np.asarray(scales, dtype=np.float64)
    if s.ndim != 1 or s.size < 3:
        raise BadScaleRange("need >= 3 scales")
    if np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise BadScaleRange("scales must be positive and strictly increasing")
    if s[-1] < 10.0 * s[0] * (1 - 1e-12):
        raise BadScaleRange(f"scales {s[0]:g}..{s[-1]:g} span under a decade")
    spacing = _point_spacing(pts)
    diam = float(max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1])))
    if s[0] < 2.0 * spacing * (1 - 1e-12):
        raise BadScaleRange(
            f"smallest scale {s[0]:g} under 2x point spacing {2 * spacing:g}")
    if s[-1] > diam / 4.0 * (1 + 1e-12):
        raise BadScaleRange(
            f"largest scale {s[-1]:g} exceeds diameter/4 = {diam / 4:g}")

    lo = pts.min(axis=0)
    counts = np.empty(s.size, dtype=np.int64)
    for i, scale in enumerate(s):
        cells = np.floor((pts - lo) / scale).astype(np.int64)
        counts[i] = np.unique(cells[:, 0] << 32 | (cells[:, 1] & 0xFFFFFFFF)).size

    lx, ly = np.log(s), np.log(counts.astype(np.float64))
    slope, intercept = theil_sen(lx, ly)
    residual = float(np.median(np.abs(ly - (intercept + slope * lx))))
    flags = []
    if np.any(np.diff(counts) > 0):
        flags.append("counts_not_monotone")
    d_est = -slope
    if not 0.0 < d_est <= 2.0:
        flags.append("dimension_out_of_range")
    return DimensionEstimate(d_est, s, counts, residual, tuple(flags))


def kappa_from_dimension(d) -> float:
    """kappa = 8 (D - 1), defined for D in [1, 2] only."""
    D = float(d.D) if isinstance(d, DimensionEstimate) else float(d)
    if not 1.0 <= D <= 2.0:
        raise OutOfRangeDimension(f"D = {D:g} outside [1, 2]")
    return 8.0 * (D - 1.0)
