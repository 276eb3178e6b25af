import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slekit.diagnostics import (
    box_counting_dimension,
    hill_curve,
    loglog_slope,
    qq_against_normal,
    welch_psd,
)
from slekit.errors import EmptyAnalysis
from slekit.report import (
    D_BIN_EDGES,
    FIXED_CLOCK,
    GLOBAL_WINDOW_ID,
    KAPPA_BIN_EDGES,
    SCHEMA_VERSION,
    DiagnosticsReport,
    WindowDiagnostics,
    assemble_report,
    write_acf_csv,
    write_boxcount_csv,
    write_hill_csv,
    write_psd_csv,
    write_qq_csv,
)
from slekit.synth import RandomSource, pareto_samples


def entry(wid=0, kind="video", **kw):
    return WindowDiagnostics(window_id=wid, channel="net", time_kind=kind, **kw)


FIXED_FIELDS = {"window_id", "channel", "time_kind", "n_samples", "beta", "D",
                "kappa", "alpha_hat", "qq_max_dev", "qq_max_dev_raw", "acf",
                "var_slope", "var_mode", "flags"}


# -- entry invariants -----------------------------------------------------------

def test_entry_dict_has_exactly_the_fixed_fields():
    d = entry().to_dict()
    assert set(d) == FIXED_FIELDS


def test_kappa_present_iff_d_in_range():
    entry(D=1.5, kappa=4.0)
    entry(D=None, kappa=None)
    entry(D=2.6)  # raw out-of-range D with kappa withheld
    with pytest.raises(ValueError):
        entry(D=1.5)  # in-range D must carry kappa
    with pytest.raises(ValueError):
        entry(D=2.6, kappa=12.8)
    with pytest.raises(ValueError):
        entry(kappa=4.0)


@settings(max_examples=50, deadline=None)
@given(st.one_of(st.none(), st.floats(0.0, 3.0)))
def test_kappa_invariant_holds_for_any_d(D):
    kappa = 8.0 * (D - 1.0) if D is not None and 1.0 <= D <= 2.0 else None
    e = entry(D=D, kappa=kappa)
    back = WindowDiagnostics.from_dict(e.to_dict())
    assert back == e


def test_entry_round_trip_with_payload():
    e = entry(wid=7, kind="capacity", n_samples=128, beta=1.9, D=1.25,
              kappa=2.0, alpha_hat=3.3, qq_max_dev=0.4, qq_max_dev_raw=1.2,
              acf=(1.0, -0.1), var_slope=2.2, var_mode="single-lag",
              flags=("qq_degenerate",))
    assert WindowDiagnostics.from_dict(e.to_dict()) == e


# -- assembly ----------------------------------------------------------------------

def test_assemble_sorts_and_pools_histograms():
    wins = [entry(wid=2, D=1.5, kappa=4.0), entry(wid=0, D=2.5),
            entry(wid=1)]
    glob = WindowDiagnostics(window_id=GLOBAL_WINDOW_ID, channel="net",
                             time_kind="video", D=1.0, kappa=0.0)
    rep = assemble_report(wins, glob)
    assert [w.window_id for w in rep.windows] == [0, 1, 2]
    assert rep.d_histogram["n"] == 3       # two local Ds + global D
    assert rep.kappa_histogram["n"] == 2   # only defined kappas
    assert sum(rep.d_histogram["counts"]) == 3
    assert rep.d_histogram["bin_edges"] == [float(e) for e in D_BIN_EDGES]
    assert rep.kappa_histogram["bin_edges"] == [float(e) for e in KAPPA_BIN_EDGES]


def test_assemble_requires_something():
    with pytest.raises(EmptyAnalysis):
        assemble_report([])
    rep = assemble_report([], global_entry=entry(wid=GLOBAL_WINDOW_ID))
    assert rep.windows == ()
    assert len(rep.all_entries()) == 1


def test_histogram_edges_span_expectations():
    assert D_BIN_EDGES[0] == 0.0 and D_BIN_EDGES[-1] == 3.0
    assert len(D_BIN_EDGES) == 31
    assert KAPPA_BIN_EDGES[0] == -8.0 and KAPPA_BIN_EDGES[-1] == 16.0
    assert len(KAPPA_BIN_EDGES) == 25


# -- JSON ---------------------------------------------------------------------------

def test_report_json_round_trip():
    wins = [entry(wid=0, beta=2.0, acf=(1.0, 0.05)),
            entry(wid=1, kind="capacity", D=1.3, kappa=2.4)]
    rep = assemble_report(wins, created=FIXED_CLOCK, notes=("a note",))
    text = rep.to_json()
    doc = json.loads(text)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["created"] == FIXED_CLOCK
    assert doc["global"] is None
    back = DiagnosticsReport.from_json(text)
    assert back.windows == rep.windows
    assert back.notes == ("a note",)
    assert back.to_json() == text  # stable fixed point


def test_report_json_is_sorted_and_newline_terminated():
    rep = assemble_report([entry()])
    text = rep.to_json()
    assert text.endswith("\n")
    keys = list(json.loads(text))
    assert keys == sorted(keys)


def test_report_json_rejects_nan():
    rep = assemble_report([entry(beta=float("nan"))])
    with pytest.raises(ValueError):
        rep.to_json()


# -- CSV writers ----------------------------------------------------------------------

def test_psd_csv_with_fit(tmp_path):
    x = RandomSource(3).normals(512)
    psd = welch_psd(x, dt=1.0, segment_length=64)
    fit = loglog_slope(psd)
    p = tmp_path / "psd.csv"
    write_psd_csv(p, psd, fit)
    lines = p.read_text().splitlines()
    assert lines[0] == "frequency,power,fitted_power"
    assert len(lines) == 1 + psd.frequencies.size
    back = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 0], psd.frequencies)
    assert np.array_equal(back[:, 1], psd.powers)
    p2 = tmp_path / "psd_nofit.csv"
    write_psd_csv(p2, psd)
    assert p2.read_text().splitlines()[0] == "frequency,power"


def test_qq_acf_csv(tmp_path):
    qq = qq_against_normal(RandomSource(5).normals(100))
    pq = tmp_path / "qq.csv"
    write_qq_csv(pq, qq)
    back = np.loadtxt(pq, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 0], qq.theoretical)
    assert np.array_equal(back[:, 1], qq.empirical)

    pa = tmp_path / "acf.csv"
    write_acf_csv(pa, [1.0, -0.25, 0.125])
    rows = np.loadtxt(pa, delimiter=",", skiprows=1)
    assert np.array_equal(rows, [[0, 1.0], [1, -0.25], [2, 0.125]])


def test_boxcount_hill_csv(tmp_path):
    t = np.arange(500.0)
    dim = box_counting_dimension(np.column_stack([t, 0.5 * t]),
                                 scales=np.geomspace(4.0, 60.0, 5))
    pb = tmp_path / "box.csv"
    write_boxcount_csv(pb, dim)
    back = np.loadtxt(pb, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1], dim.counts)

    x = pareto_samples(1.5, 300, RandomSource(9))
    results = hill_curve(x, [10, 30, 90])
    ph = tmp_path / "hill.csv"
    write_hill_csv(ph, results)
    rows = np.loadtxt(ph, delimiter=",", skiprows=1)
    assert list(rows[:, 0]) == [10.0, 30.0, 90.0]
