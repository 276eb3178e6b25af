"""Report assembly and table emission.

A report aggregates per-window diagnostics plus one optional global entry
(the analysis of the full-frame largest connected component) into a JSON
document with fixed field names, together with histograms of D and kappa.
CSV table writers for the individual diagnostics live here as well; plots
are in plots.py.

JSON field names are part of the interface and never change:
beta, D, kappa, alpha_hat, qq_max_dev, acf, var_slope, window_id,
channel, time_kind.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import DimensionEstimate, HillResult, PsdEstimate, QqResult, SlopeFit
from .errors import EmptyAnalysis

SCHEMA_VERSION = 1
FIXED_CLOCK = "1970-01-01T00:00:00Z"
GLOBAL_WINDOW_ID = -1

# raw D values land in these bins even when nonphysical; kappa bins cover
# 8*(D-1) over the same span
D_BIN_EDGES = np.round(np.linspace(0.0, 3.0, 31), 10)
KAPPA_BIN_EDGES = np.round(np.linspace(-8.0, 16.0, 25), 10)

_FMT = "%.17g"


def _opt(x):
    return None if x is None else float(x)


@dataclass(frozen=True)
class WindowDiagnostics:
    """Diagnostics for one analysis window (window_id -1 = global).

    qq_max_dev is computed on driving increments; qq_max_dev_raw on the
    raw driving values (both are reported because either reading of the
    Q-Q input is defensible). kappa is present exactly when D is present
    and lies in [1, 2]; out-of-range D is kept raw and flagged.
    var_slope estimates kappa only in capacity time; in video time it is
    indicative only (flagged via time_kind).
    """

    window_id: int
    channel: str
    time_kind: str
    n_samples: int = 0
    beta: float | None = None
    D: float | None = None
    kappa: float | None = None
    alpha_hat: float | None = None
    qq_max_dev: float | None = None
    qq_max_dev_raw: float | None = None
    acf: tuple = ()
    var_slope: float | None = None
    var_mode: str | None = None
    flags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "acf", tuple(float(a) for a in self.acf))
        object.__setattr__(self, "flags", tuple(str(f) for f in self.flags))
        has_kappa = self.kappa is not None
        valid_d = self.D is not None and 1.0 <= self.D <= 2.0
        if has_kappa != valid_d:
            raise ValueError("kappa must be present exactly when D is in [1, 2]")

    def to_dict(self) -> dict:
        return {
            "window_id": int(self.window_id),
            "channel": self.channel,
            "time_kind": self.time_kind,
            "n_samples": int(self.n_samples),
            "beta": _opt(self.beta),
            "D": _opt(self.D),
            "kappa": _opt(self.kappa),
            "alpha_hat": _opt(self.alpha_hat),
            "qq_max_dev": _opt(self.qq_max_dev),
            "qq_max_dev_raw": _opt(self.qq_max_dev_raw),
            "acf": [float(a) for a in self.acf],
            "var_slope": _opt(self.var_slope),
            "var_mode": self.var_mode,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WindowDiagnostics":
        return cls(
            window_id=int(d["window_id"]), channel=d["channel"],
            time_kind=d["time_kind"], n_samples=int(d.get("n_samples", 0)),
            beta=d.get("beta"), D=d.get("D"), kappa=d.get("kappa"),
            alpha_hat=d.get("alpha_hat"), qq_max_dev=d.get("qq_max_dev"),
            qq_max_dev_raw=d.get("qq_max_dev_raw"),
            acf=tuple(d.get("acf", ())), var_slope=d.get("var_slope"),
            var_mode=d.get("var_mode"), flags=tuple(d.get("flags", ())))


@dataclass(frozen=True)
class DiagnosticsReport:
    """Assembled per-window + global diagnostics with D/kappa histograms."""

    windows: tuple
    global_entry: WindowDiagnostics | None
    created: str
    d_histogram: dict = field(default_factory=dict)
    kappa_histogram: dict = field(default_factory=dict)
    notes: tuple = ()

    def all_entries(self) -> list:
        out = list(self.windows)
        if self.global_entry is not None:
            out.append(self.global_entry)
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "created": self.created,
            "windows": [w.to_dict() for w in self.windows],
            "global": None if self.global_entry is None else self.global_entry.to_dict(),
            "histograms": {"D": self.d_histogram, "kappa": self.kappa_histogram},
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True,
                          allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DiagnosticsReport":
        d = json.loads(text)
        glob = d.get("global")
        hists = d.get("histograms", {})
        return cls(
            windows=tuple(WindowDiagnostics.from_dict(w) for w in d["windows"]),
            global_entry=None if glob is None else WindowDiagnostics.from_dict(glob),
            created=d["created"],
            d_histogram=hists.get("D", {}),
            kappa_histogram=hists.get("kappa", {}),
            notes=tuple(d.get("notes", ())))


def _histogram(values, edges: np.ndarray) -> dict:
    vals = [v for v in values if v is not None and np.isfinite(v)]
    counts, _ = np.histogram(np.asarray(vals, dtype=np.float64), bins=edges)
    return {
        "bin_edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
        "n": len(vals),
    }


def assemble_report(windows, global_entry=None, created: str = FIXED_CLOCK,
                    notes=()) -> DiagnosticsReport:
    """Aggregate window entries and an optional global entry into a report.

    Entries are ordered by window_id. Histograms pool the global entry
    with the local ones; D keeps raw (possibly nonphysical) values while
    the kappa histogram only sees entries where kappa was defined.
    """
    wins = sorted(windows, key=lambda w: w.window_id)
    if not wins and global_entry is None:
        raise EmptyAnalysis("no analyzed windows and no global component")
    pool = list(wins) + ([global_entry] if global_entry is not None else [])
    return DiagnosticsReport(
        windows=tuple(wins), global_entry=global_entry, created=created,
        d_histogram=_histogram((w.D for w in pool), D_BIN_EDGES),
        kappa_histogram=_histogram((w.kappa for w in pool), KAPPA_BIN_EDGES),
        notes=tuple(notes))


# -- CSV tables ---------------------------------------------------------------

def _write_rows(path, header: str, columns) -> None:
    data = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    np.savetxt(path, data, fmt=_FMT, delimiter=",", header=header, comments="")


def write_psd_csv(path, psd: PsdEstimate, fit: SlopeFit | None = None) -> None:
    """frequency,power[,fitted_power] rows; fit column only when fitted."""
    cols = [psd.frequencies, psd.powers]
    header = "frequency,power"
    if fit is not None:
        cols.append(np.exp(fit.intercept - fit.beta * np.log(psd.frequencies)))
        header += ",fitted_power"
    _write_rows(path, header, cols)


def write_qq_csv(path, qq: QqResult) -> None:
    _write_rows(path, "theoretical,empirical", [qq.theoretical, qq.empirical])


def write_acf_csv(path, acf) -> None:
    lags = np.arange(len(acf))
    _write_rows(path, "lag,acf", [lags, acf])


def write_boxcount_csv(path, dim: DimensionEstimate) -> None:
    _write_rows(path, "scale,count", [dim.scales, dim.counts])


def write_hill_csv(path, results) -> None:
    """Hill plateau table: one row per threshold order."""
    _write_rows(path, "n0,alpha_hat",
                [[r.n0 for r in results], [r.alpha_hat for r in results]])
