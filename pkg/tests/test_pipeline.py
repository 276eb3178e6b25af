import json

import numpy as np
import pytest

from slekit.driving import CAPACITY, VIDEO
from slekit.errors import DegenerateCloud, MissingFrame
from slekit.masks import WindowSpec, window_mesh
from slekit.pipeline import (
    RunConfig,
    analyze,
    embed_trajectory,
    front_trajectory,
    zip_trajectory,
)
from slekit.report import GLOBAL_WINDOW_ID, DiagnosticsReport


def run_cfg(disk_manifest, tmp_path, name="out", **kw):
    return RunConfig(manifest=str(disk_manifest),
                     output_dir=str(tmp_path / name), fixed_clock=True, **kw)


# -- config ------------------------------------------------------------------

def test_config_validation():
    ok = dict(manifest="m.json", output_dir="o")
    RunConfig(**ok)
    with pytest.raises(ValueError):
        RunConfig(**ok, mode="fastest")
    with pytest.raises(ValueError):
        RunConfig(**ok, channel="sideways")
    with pytest.raises(ValueError):
        RunConfig(**ok, nx=0)
    with pytest.raises(ValueError):
        RunConfig(**ok, welch_overlap=1.0)
    with pytest.raises(ValueError):
        RunConfig(**ok, welch_segment_length=100)
    with pytest.raises(ValueError):
        RunConfig(**ok, hill_n0=5)
    with pytest.raises(ValueError):
        RunConfig(**ok, workers=0)


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        RunConfig.from_dict({"manifest": "m", "output_dir": "o",
                             "window_count": 9})


def test_config_round_trip_and_json(tmp_path, disk_manifest):
    cfg = RunConfig(manifest=str(disk_manifest),
                    output_dir="o", box_scales=(2.0, 8.0, 32.0),
                    fit_range=(0.01, 0.1))
    back = RunConfig.from_dict(cfg.to_dict())
    assert back == cfg
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert RunConfig.from_json(p) == cfg
    missing = dict(cfg.to_dict(), manifest=str(tmp_path / "gone.json"))
    p.write_text(json.dumps(missing))
    with pytest.raises(FileNotFoundError):
        RunConfig.from_json(p)


# -- trajectory embedding ------------------------------------------------------

def test_front_trajectory_dedupes(disk_sequence):
    win = [w for w in window_mesh(disk_sequence.dims, 3, 3, disk_sequence)
           if w.index == 1][0]
    pts = front_trajectory(disk_sequence, win)
    assert pts.shape[1] == 2
    assert pts.shape[0] >= 2
    assert not np.any(np.all(pts[1:] == pts[:-1], axis=1))


def test_embed_trajectory_geometry():
    pts = np.array([[5.0, 5.0], [6.0, 5.0], [7.0, 6.0]])
    z = embed_trajectory(pts)
    assert z[0] == 0
    # net displacement lands on the positive imaginary axis
    assert z[-1].real == pytest.approx(0.0, abs=1e-12)
    assert z[-1].imag == pytest.approx(np.hypot(2.0, 1.0), abs=1e-12)
    # rigid motion: pairwise distances survive
    d_in = np.abs(np.diff(pts[:, 0] + 1j * pts[:, 1]))
    assert np.allclose(np.abs(np.diff(z)), d_in, atol=1e-12)


def test_embed_trajectory_degenerate():
    with pytest.raises(DegenerateCloud):
        embed_trajectory(np.array([[1.0, 2.0]]))
    loop = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DegenerateCloud):
        embed_trajectory(loop)


def test_zip_trajectory_yields_capacity_driver(disk_sequence):
    win = [w for w in window_mesh(disk_sequence.dims, 3, 3, disk_sequence)
           if w.index == 1][0]
    drv = zip_trajectory(disk_sequence, win)
    assert drv.time_kind == CAPACITY
    assert drv.times[0] == 0.0
    assert np.all(np.diff(drv.times) > 0)


# -- end-to-end -----------------------------------------------------------------

@pytest.fixture(scope="module")
def disk_run(disk_manifest, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = RunConfig(manifest=str(disk_manifest),
                    output_dir=str(tmp / "out"), fixed_clock=True)
    report_path = analyze(cfg)
    return cfg, report_path


def test_analyze_artifact_layout(disk_run):
    cfg, report_path = disk_run
    out = report_path.parent
    assert report_path.name == "report.json"
    assert (out / "config.json").is_file()
    assert (out / "histograms.svg").is_file()
    assert (out / "global" / "driver.csv").is_file()
    win_dirs = sorted(p.name for p in (out / "windows").iterdir())
    assert win_dirs == [f"win_{i:03d}" for i in range(9)]
    # an outer window carries both parametrizations plus spectra
    w1 = out / "windows" / "win_001"
    assert (w1 / "driver.csv").is_file()
    assert (w1 / "driver_capacity.csv").is_file()
    assert (w1 / "video" / "psd.csv").is_file()
    # window-clipped boundary arcs are too short for a scale ladder here;
    # only the full-frame component supports box counting
    assert not (w1 / "boxcount.csv").exists()
    assert (out / "global" / "boxcount.csv").is_file()
    cfg_back = json.loads((out / "config.json").read_text())
    assert cfg_back == cfg.to_dict()


def test_analyze_report_contents(disk_run):
    _, report_path = disk_run
    rep = DiagnosticsReport.from_json(report_path.read_text())
    assert rep.created == "1970-01-01T00:00:00Z"
    assert rep.global_entry is not None
    assert rep.global_entry.window_id == GLOBAL_WINDOW_ID
    assert rep.global_entry.time_kind == VIDEO

    by_kind = {}
    for w in rep.windows:
        by_kind.setdefault(w.window_id, set()).add(w.time_kind)
    # mode "both": every mesh window reports both parametrizations
    for wid in range(9):
        assert by_kind[wid] == {VIDEO, CAPACITY}
    # plus the global capacity twin appended to the window list
    assert GLOBAL_WINDOW_ID in by_kind

    center = [w for w in rep.windows
              if w.window_id == 4 and w.time_kind == VIDEO][0]
    assert "qq_degenerate" in center.flags or "too_short" in center.flags
    edge = [w for w in rep.windows
            if w.window_id == 1 and w.time_kind == VIDEO][0]
    assert edge.n_samples > 2
    assert edge.var_mode == "single-lag"


def test_analyze_kappa_entries_respect_invariant(disk_run):
    _, report_path = disk_run
    rep = DiagnosticsReport.from_json(report_path.read_text())
    for w in rep.all_entries():
        if w.kappa is not None:
            assert w.D is not None and 1.0 <= w.D <= 2.0
            assert w.kappa == pytest.approx(8.0 * (w.D - 1.0), abs=1e-12)


def test_analyze_deterministic(disk_manifest, tmp_path):
    a = analyze(run_cfg(disk_manifest, tmp_path, "a"))
    b = analyze(run_cfg(disk_manifest, tmp_path, "b"))
    assert a.read_bytes() == b.read_bytes()
    assert (a.parent / "histograms.svg").read_bytes() == \
        (b.parent / "histograms.svg").read_bytes()


def test_analyze_refuses_nonempty_output(disk_manifest, tmp_path):
    out = tmp_path / "occupied"
    out.mkdir()
    (out / "keep.txt").write_text("precious")
    cfg = RunConfig(manifest=str(disk_manifest),
                    output_dir=str(out))
    with pytest.raises(ValueError, match="not empty"):
        analyze(cfg)
    assert (out / "keep.txt").read_text() == "precious"


def test_analyze_failure_marker(tmp_path):
    bad = tmp_path / "manifest.json"
    bad.write_text(json.dumps({"channel": "network", "frames": [
        {"path": "ghost.pgm", "t_seconds": 0.0}]}))
    out = tmp_path / "out"
    cfg = RunConfig(manifest=str(bad), output_dir=str(out))
    with pytest.raises(MissingFrame) as exc_info:
        analyze(cfg)
    assert exc_info.value.failed_stage == "load"
    assert [p.name for p in out.iterdir()] == ["FAILED.json"]
    marker = json.loads((out / "FAILED.json").read_text())
    assert marker["failed_stage"] == "load"
    assert marker["error"] == "MissingFrame"
    assert not (tmp_path / "out.staging").exists()


def test_analyze_mode_observable_only(disk_manifest, tmp_path):
    cfg = run_cfg(disk_manifest, tmp_path, "obs", mode="observable")
    rep = DiagnosticsReport.from_json(analyze(cfg).read_text())
    kinds = {w.time_kind for w in rep.all_entries()}
    assert kinds == {VIDEO}
    # the observable driver is still written even without capacity entries
    assert (tmp_path / "obs" / "windows" / "win_001" / "driver.csv").is_file()


def test_analyze_mode_zipper_only(disk_manifest, tmp_path):
    cfg = run_cfg(disk_manifest, tmp_path, "zip", mode="zipper")
    rep = DiagnosticsReport.from_json(analyze(cfg).read_text())
    assert {w.time_kind for w in rep.all_entries()} <= {CAPACITY}
    out = tmp_path / "zip" / "windows" / "win_001"
    assert (out / "driver.csv").is_file()          # observable always emitted
    assert (out / "driver_capacity.csv").is_file()
