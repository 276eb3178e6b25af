"""Driving-function container and its CSV serialization.

A driving function is a sampled real-valued path (t_k, U_k), k = 0..n,
tagged with the kind of clock its times follow: "video" (wall-clock frame
times) or "capacity" (half-plane capacity time, hcap = 2t). Samples are
grouped into contiguous segments; a new segment starts wherever the
underlying observation had a gap (frames with no activity). Most functions
are single-segment.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

VIDEO = "video"
CAPACITY = "capacity"
_KINDS = (VIDEO, CAPACITY)

# 17 significant digits round-trips any IEEE double through text.
_FMT = "%.17g"


@dataclass(frozen=True)
class DrivingFunction:
    """Sampled driving function with a time-kind tag and gap segments.

    Parameters
    ----------
    times : array
        Strictly increasing sample times, finite.
    values : array
        Driving values, finite, same length as times.
    time_kind : str
        "video" or "capacity".
    segments : tuple of (int, int), optional
        Half-open index ranges partitioning the samples into contiguous
        runs. Defaults to a single run covering everything.
    """

    times: np.ndarray
    values: np.ndarray
    time_kind: str
    segments: tuple = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or v.ndim != 1:
            raise ValueError("times and values must be 1-D")
        if t.shape != v.shape:
            raise ValueError("times and values must have equal length")
        if t.size == 0:
            raise ValueError("a driving function needs at least one sample")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise ValueError("times and values must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if self.time_kind not in _KINDS:
            raise ValueError(f"time_kind must be one of {_KINDS}")
        seg = self.segments
        if seg is None:
            seg = ((0, t.size),)
        seg = tuple((int(a), int(b)) for a, b in seg)
        # segments must tile 0..n in order, each nonempty
        pos = 0
        for a, b in seg:
            if a != pos or b <= a:
                raise ValueError("segments must be a contiguous partition")
            pos = b
        if pos != t.size:
            raise ValueError("segments must cover all samples")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "segments", seg)

    @property
    def n_samples(self) -> int:
        return self.times.size

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def segment_arrays(self):
        """Yield (times, values) views for each contiguous segment."""
        for a, b in self.segments:
            yield self.times[a:b], self.values[a:b]

    def to_csv(self, path) -> None:
        """Write ``time,value,time_kind`` rows, 17 significant digits.

        Functions with more than one segment gain a fourth ``segment``
        column so the gap structure survives the round trip.
        """
        multi = len(self.segments) > 1
        seg_of = np.empty(self.n_samples, dtype=int)
        for i, (a, b) in enumerate(self.segments):
            seg_of[a:b] = i
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if multi:
                w.writerow(["time", "value", "time_kind", "segment"])
            else:
                w.writerow(["time", "value", "time_kind"])
            for i in range(self.n_samples):
                row = [_FMT % self.times[i], _FMT % self.values[i], self.time_kind]
                if multi:
                    row.append(str(seg_of[i]))
                w.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "DrivingFunction":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header[:3] != ["time", "value", "time_kind"]:
                raise ValueError(f"unexpected driving CSV header: {header}")
            has_seg = len(header) > 3 and header[3] == "segment"
            times, values, kinds, segids = [], [], [], []
            for row in r:
                if not row:
                    continue
                times.append(float(row[0]))
                values.append(float(row[1]))
                kinds.append(row[2])
                segids.append(int(row[3]) if has_seg else 0)
        if not times:
            raise ValueError("empty driving CSV")
        if len(set(kinds)) != 1:
            raise ValueError("mixed time_kind values in one CSV")
        segments = _runs_to_segments(segids)
        return cls(np.array(times), np.array(values), kinds[0], segments)


def _runs_to_segments(ids):
    """Turn a per-row segment id list into half-open index ranges."""
    segments = []
    start = 0
    for i in range(1, len(ids)):
        if ids[i] != ids[i - 1]:
            segments.append((start, i))
            start = i
    segments.append((start, len(ids)))
    return tuple(segments)
