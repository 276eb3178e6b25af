"""Batch analysis: masks -> windows -> drivers -> diagnostics -> artifacts.

analyze() is the one entry point. It stages every artifact in a scratch
directory and atomically renames it to the requested output directory on
success; on any error the output directory holds a single FAILED.json
marker naming the stage and the exception, never partial results.

Per window the battery always runs on the direct video-time observable;
the zipper route turns the window's front trajectory into a capacity-time
driver. The `mode` knob selects which of the two time parametrizations
get diagnostic entries ("observable", "zipper", or "both"). A failed
diagnostic never fabricates a value: the entry keeps None and gains a
flag token.
"""
from __future__ import annotations

import json
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import plots
from .driving import CAPACITY, VIDEO, DrivingFunction
from .errors import (
    BadScaleRange,
    DegenerateCloud,
    DegenerateSample,
    EmptyMask,
    InsufficientActivity,
    NotConnected,
    SlekitError,
)
from .loewner import inverse_driving
from .masks import (
    CHANNELS,
    MaskFrame,
    MaskSequence,
    WindowSpec,
    build_surrogate_driver,
    external_boundary,
    largest_connected_component,
    load_mask_sequence,
    minimal_active_radius,
    subsample_nonredundant,
    window_mesh,
)
from .report import (
    FIXED_CLOCK,
    GLOBAL_WINDOW_ID,
    DiagnosticsReport,
    WindowDiagnostics,
    assemble_report,
    write_acf_csv,
    write_boxcount_csv,
    write_hill_csv,
    write_psd_csv,
    write_qq_csv,
)

MODES = ("observable", "zipper", "both")

# battery failures downgrade to these flag tokens; anything else propagates
_SOFT_ERRORS = (SlekitError,)


@dataclass(frozen=True)
class RunConfig:
    """Everything one analysis run depends on.

    welch_segment_length, hill_n0, box_scales, and fit_range default to
    None, meaning "use the documented estimator default".
    """

    manifest: str
    output_dir: str
    channel: str = "brightening"
    nx: int = 3
    ny: int = 3
    subsample_threshold: int = 0
    welch_segment_length: int | None = None
    welch_overlap: float = 0.5
    welch_taper: str = "hann"
    hill_n0: int | None = None
    box_scales: tuple | None = None
    fit_range: tuple | None = None
    n_time_bins: int = 10
    max_acf_lag: int = 20
    mode: str = "both"
    workers: int = 4
    seed: int | None = None
    fixed_clock: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("mesh needs nx >= 1 and ny >= 1")
        if self.subsample_threshold < 0:
            raise ValueError("subsample_threshold must be >= 0")
        if not 0.0 <= self.welch_overlap < 1.0:
            raise ValueError("welch_overlap must lie in [0, 1)")
        if self.welch_segment_length is not None:
            L = int(self.welch_segment_length)
            if L < 2 or L & (L - 1):
                raise ValueError("welch_segment_length must be a power of two")
        if self.hill_n0 is not None and self.hill_n0 < 10:
            raise ValueError("hill_n0 must be >= 10")
        if self.n_time_bins < 2:
            raise ValueError("n_time_bins must be >= 2")
        if self.max_acf_lag < 1:
            raise ValueError("max_acf_lag must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.box_scales is not None:
            object.__setattr__(self, "box_scales",
                               tuple(float(s) for s in self.box_scales))
        if self.fit_range is not None:
            lo, hi = (float(v) for v in self.fit_range)
            object.__setattr__(self, "fit_range", (lo, hi))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            cfg = cls.from_dict(json.load(fh))
        if not Path(cfg.manifest).exists():
            raise FileNotFoundError(f"manifest not found: {cfg.manifest}")
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["box_scales"] is not None:
            d["box_scales"] = list(d["box_scales"])
        if d["fit_range"] is not None:
            d["fit_range"] = list(d["fit_range"])
        return d


# -- per-window battery --------------------------------------------------------

def _longest_segment(driver: DrivingFunction):
    a, b = max(driver.segments, key=lambda s: s[1] - s[0])
    return driver.times[a:b], driver.values[a:b]


def front_trajectory(seq: MaskSequence, window: WindowSpec) -> np.ndarray:
    """(x, y) positions of the window's nearest-active pixel per active frame.

    Consecutive repeats collapse to one vertex: a front pixel that stays
    put adds no geometry, only parametrization, and the zipper consumes
    geometry.
    """
    center = window.center()
    pts = []
    for frame in seq.frames:
        try:
            _, m = minimal_active_radius(window, frame, center)
        except SlekitError:
            continue
        if not pts or m != pts[-1]:
            pts.append(m)
    return np.asarray(pts, dtype=np.float64).reshape(-1, 2)


def embed_trajectory(points: np.ndarray) -> np.ndarray:
    """Plant a planar trajectory in the upper half-plane for the zipper.

    The first point moves to the origin and the net displacement (last
    minus first) is rotated onto the positive imaginary axis. Points that
    still land at or below the real axis are the zipper's problem
    (SelfTouch), not silently repaired here.
    """
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 2:
        raise DegenerateCloud("trajectory needs >= 2 (x, y) points")
    z = p[:, 0] + 1j * p[:, 1]
    z = z - z[0]
    net = z[-1]
    if net == 0:
        raise DegenerateCloud("trajectory has zero net displacement")
    z = z * (1j * abs(net) / net)
    return z


def zip_trajectory(seq: MaskSequence, window: WindowSpec) -> DrivingFunction:
    """Capacity-time driver of a window's embedded front trajectory."""
    return inverse_driving(embed_trajectory(front_trajectory(seq, window)))


def _window_dimension(seq: MaskSequence, window: WindowSpec, scales):
    """Median per-frame box dimension of the window-clipped boundary.

    Frames whose clipped component is too small for a valid scale ladder
    are skipped; (None, last estimate, flags) summarizes what happened.
    """
    ds, last, flags = [], None, set()
    for frame in seq.frames:
        sub = window.clip(frame.bits)
        if not sub.any():
            continue
        comp = largest_connected_component(MaskFrame(sub, frame.timestamp))
        try:
            contour = external_boundary(comp)
            est = dg.box_counting_dimension(contour.points, scales)
        except (BadScaleRange, DegenerateCloud, EmptyMask, NotConnected):
            continue
        ds.append(est.D)
        last = est
        flags.update(est.flags)
    if not ds:
        return None, None, ("box_scale_range",)
    return float(np.median(ds)), last, tuple(sorted(flags))


def _battery(driver: DrivingFunction, cfg: RunConfig, window_id: int,
             channel: str) -> tuple:
    """Run every increment/spectral diagnostic on one driver.

    Returns (field dict for WindowDiagnostics, artifact dict). Failures
    of individual estimators become flag tokens.
    """
    fields = {
        "window_id": window_id, "channel": channel,
        "time_kind": driver.time_kind, "n_samples": driver.n_samples,
    }
    arts = {"driver": driver}
    flags = []

    try:
        dx = dg.increments(driver)
    except _SOFT_ERRORS:
        fields["flags"] = ("too_short",)
        return fields, arts

    try:
        qq = dg.qq_against_normal(dx)
        fields["qq_max_dev"] = qq.max_deviation
        arts["qq"] = qq
    except _SOFT_ERRORS:
        flags.append("qq_degenerate")
    try:
        fields["qq_max_dev_raw"] = dg.qq_against_normal(driver.values).max_deviation
    except _SOFT_ERRORS:
        flags.append("qq_raw_degenerate")

    try:
        acf = dg.autocorrelation(dx, min(cfg.max_acf_lag, dx.size - 1))
        fields["acf"] = tuple(acf)
        arts["acf"] = acf
    except (*_SOFT_ERRORS, ValueError):
        flags.append("acf_degenerate")

    seg_t, seg_v = _longest_segment(driver)
    try:
        if seg_t.size < 2:
            raise DegenerateSample("segment too short for a sample rate")
        dt = float(np.median(np.diff(seg_t)))
        psd = dg.welch_psd(seg_v, dt, cfg.welch_segment_length,
                           cfg.welch_overlap, cfg.welch_taper)
        arts["psd"] = psd
        fit = dg.loglog_slope(psd, cfg.fit_range)
        fields["beta"] = fit.beta
        arts["psd_fit"] = fit
    except _SOFT_ERRORS:
        flags.append("psd_failed" if "psd" not in arts else "slope_failed")

    try:
        vg = dg.variance_growth(driver, cfg.n_time_bins)
        fields["var_slope"] = vg.slope
        fields["var_mode"] = vg.mode
    except _SOFT_ERRORS:
        flags.append("variance_failed")

    n0 = cfg.hill_n0 if cfg.hill_n0 is not None else dg.default_hill_n0(dx.size)
    try:
        fields["alpha_hat"] = dg.hill_estimator(dx, n0).alpha_hat
    except _SOFT_ERRORS:
        flags.append("hill_failed")
    n_pos = int(np.count_nonzero(dx))
    if n_pos > 11:
        ladder = np.unique(np.geomspace(10, n_pos - 1, 12).astype(int))
        curve = dg.hill_curve(dx, ladder)
        if curve:
            arts["hill"] = curve

    fields["flags"] = tuple(flags)
    return fields, arts


def _analyze_window(seq: MaskSequence, window: WindowSpec,
                    cfg: RunConfig) -> tuple:
    """Entries and artifacts for one window: (entries, artifacts) lists."""
    wid = window.index
    entries, artifacts = [], {}

    observable = None
    base_flags = []
    try:
        observable = build_surrogate_driver(seq, window)
    except (InsufficientActivity, DegenerateCloud):
        base_flags.append("insufficient_activity")

    D = kappa = None
    dim_est = None
    dim_flags = ()
    if observable is not None:
        D, dim_est, dim_flags = _window_dimension(seq, window, cfg.box_scales)
        if D is not None:
            try:
                kappa = dg.kappa_from_dimension(D)
            except _SOFT_ERRORS:
                dim_flags = tuple(sorted({*dim_flags, "dimension_out_of_range"}))
        if dim_est is not None:
            artifacts["boxcount"] = dim_est

    want_video = cfg.mode in ("observable", "both")
    want_capacity = cfg.mode in ("zipper", "both")

    if observable is None:
        kinds = [VIDEO] if want_video else []
        if want_capacity:
            kinds.append(CAPACITY)
        for kind in kinds:
            entries.append(WindowDiagnostics(
                window_id=wid, channel=cfg.channel, time_kind=kind,
                flags=tuple(base_flags)))
        return entries, artifacts

    dim_attached = False
    if want_video:
        fields, arts = _battery(observable, cfg, wid, cfg.channel)
        fields["D"], fields["kappa"] = D, kappa
        fields["flags"] = tuple(fields.get("flags", ())) + dim_flags
        dim_attached = True
        entries.append(WindowDiagnostics(**fields))
        artifacts["video"] = arts
    else:
        # still emit the observable driver itself alongside the zipper route
        artifacts["video"] = {"driver": observable}

    if want_capacity:
        try:
            cap_driver = zip_trajectory(seq, window)
        except (*_SOFT_ERRORS, ValueError):
            entries.append(WindowDiagnostics(
                window_id=wid, channel=cfg.channel, time_kind=CAPACITY,
                flags=("zipper_failed",)))
        else:
            fields, arts = _battery(cap_driver, cfg, wid, cfg.channel)
            if not dim_attached:
                fields["D"], fields["kappa"] = D, kappa
                fields["flags"] = tuple(fields.get("flags", ())) + dim_flags
            entries.append(WindowDiagnostics(**fields))
            artifacts["capacity"] = arts
    return entries, artifacts


# -- artifact writing ----------------------------------------------------------

def _write_battery_dir(root: Path, arts: dict) -> None:
    root.mkdir(parents=True, exist_ok=True)
    if "psd" in arts:
        fit = arts.get("psd_fit")
        write_psd_csv(root / "psd.csv", arts["psd"], fit)
        plots.plot_psd(root / "psd.svg", arts["psd"], fit)
    if "qq" in arts:
        write_qq_csv(root / "qq.csv", arts["qq"])
        plots.plot_qq(root / "qq.svg", arts["qq"])
    if "acf" in arts:
        write_acf_csv(root / "acf.csv", arts["acf"])
    if "hill" in arts:
        write_hill_csv(root / "hill.csv", arts["hill"])
        plots.plot_hill(root / "hill.svg", arts["hill"])


def _write_window_dir(root: Path, artifacts: dict) -> None:
    root.mkdir(parents=True, exist_ok=True)
    video = artifacts.get("video")
    if video is not None:
        video["driver"].to_csv(root / "driver.csv")
        _write_battery_dir(root / "video", {k: v for k, v in video.items()
                                            if k != "driver"})
    cap = artifacts.get("capacity")
    if cap is not None:
        cap["driver"].to_csv(root / "driver_capacity.csv")
        _write_battery_dir(root / "capacity", {k: v for k, v in cap.items()
                                               if k != "driver"})
    if "boxcount" in artifacts:
        write_boxcount_csv(root / "boxcount.csv", artifacts["boxcount"])


def _fail_marker(out_dir: Path, stage: str, exc: BaseException) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = {"failed_stage": stage, "error": type(exc).__name__,
              "message": str(exc)}
    (out_dir / "FAILED.json").write_text(
        json.dumps(marker, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def analyze(cfg: RunConfig) -> Path:
    """Run the full pipeline; returns the path of the report JSON.

    Deterministic for a given config (fixed_clock pins the only
    wall-clock field). The output directory must not already hold files.
    """
    out_dir = Path(cfg.output_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        raise ValueError(f"output directory {out_dir} is not empty")
    staging = out_dir.parent / (out_dir.name + ".staging")
    if staging.exists():
        shutil.rmtree(staging)

    stage = "load"
    try:
        seq = load_mask_sequence(cfg.manifest)
        seq = subsample_nonredundant(seq, cfg.subsample_threshold)

        stage = "mesh"
        windows = window_mesh(seq.dims, cfg.nx, cfg.ny, seq)
        h, w = seq.dims
        global_window = WindowSpec((0, 0), (w, h), "outer", GLOBAL_WINDOW_ID)

        stage = "windows"
        with ThreadPoolExecutor(max_workers=min(cfg.workers,
                                                max(1, len(windows)))) as pool:
            results = list(pool.map(
                lambda win: _analyze_window(seq, win, cfg), windows))

        stage = "global"
        global_entries, global_arts = _analyze_window(seq, global_window, cfg)

        stage = "report"
        staging.mkdir(parents=True)
        all_entries = [e for entries, _ in results for e in entries]
        # one global entry in the report: prefer the video-time analysis
        g = min(global_entries, key=lambda e: e.time_kind != VIDEO,
                default=None)
        extra_global = [e for e in global_entries if e is not g]
        created = FIXED_CLOCK if cfg.fixed_clock else (
            datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
        notes = [f"windows analyzed: {len(windows)}",
                 f"frames after subsampling: {seq.n_frames}",
                 "video-time variance slopes are indicative only"]
        report = assemble_report(all_entries + extra_global, g,
                                 created=created, notes=notes)
        (staging / "report.json").write_text(report.to_json(),
                                             encoding="utf-8")
        (staging / "config.json").write_text(
            json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        plots.plot_histograms(staging / "histograms.svg", report)
        for win, (_, artifacts) in zip(windows, results):
            _write_window_dir(staging / "windows" / f"win_{win.index:03d}",
                              artifacts)
        _write_window_dir(staging / "global", global_arts)

        # POSIX rename onto a missing or empty directory is atomic
        staging.rename(out_dir)
    except BaseException as exc:
        if staging.exists():
            shutil.rmtree(staging, ignore_errors=True)
        _fail_marker(out_dir, stage, exc)
        exc.failed_stage = stage
        raise
    return out_dir / "report.json"
