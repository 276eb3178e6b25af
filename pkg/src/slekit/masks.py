"""Mask ingestion and the per-window surrogate driving observable.

Coordinates: masks are numpy bool grids indexed [row, col]; all point-like
quantities (contour vertices, barycenters, centers, axes) are (x, y) pairs
with x = col and y = row, both in pixel-center units. Lexicographic tie
breaking is always on (row, col).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .driving import VIDEO, DrivingFunction
from .errors import (
    DegenerateCloud,
    DimensionMismatch,
    EmptyMask,
    InsufficientActivity,
    MissingFrame,
    NoActivity,
    NonmonotoneTimestamps,
    NonUnitAxis,
    NotConnected,
)

CHANNELS = ("pseudopods", "network", "brightening", "dimming")

# 8-connectivity everywhere: components and boundary tracing agree.
_STRUCT8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class MaskFrame:
    """One binary occupancy grid with its acquisition time (seconds)."""

    bits: np.ndarray
    timestamp: float

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError("mask bits must be a 2-D grid")
        b = b.astype(bool)
        t = float(self.timestamp)
        if not np.isfinite(t) or t < 0:
            raise ValueError("timestamp must be finite and >= 0")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)
        object.__setattr__(self, "timestamp", t)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.bits))


@dataclass(frozen=True)
class MaskSequence:
    """Ordered frames of one channel, plus optional physical pixel scale."""

    frames: tuple
    channel: str
    pixel_scale: float | None = None

    def __post_init__(self):
        frames = tuple(self.frames)
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")
        n = len(frames)
        if n < 1 or n > 720:
            # guidance bound, not a hard contract
            warnings.warn(f"frame count {n} outside the expected 1..720 range")
        if n > 1:
            ts = np.array([f.timestamp for f in frames])
            if not np.all(np.diff(ts) > 0):
                raise NonmonotoneTimestamps("timestamps must strictly increase")
            dims = {(f.height, f.width) for f in frames}
            if len(dims) != 1:
                raise DimensionMismatch(f"mixed frame dimensions: {sorted(dims)}")
        if self.pixel_scale is not None and not (float(self.pixel_scale) > 0):
            raise ValueError("pixel_scale must be positive when given")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def dims(self) -> tuple:
        """(height, width) of every frame."""
        return self.frames[0].bits.shape

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([f.timestamp for f in self.frames])


@dataclass(frozen=True)
class WindowSpec:
    """One mesh cell: origin (x0, y0), extent (width, height), inner/outer."""

    origin: tuple
    extent: tuple
    kind: str
    index: int

    def __post_init__(self):
        x0, y0 = (int(v) for v in self.origin)
        w, h = (int(v) for v in self.extent)
        if x0 < 0 or y0 < 0:
            raise ValueError("window origin must be nonnegative")
        if w < 1 or h < 1:
            raise ValueError("window extent must be at least 1x1")
        if self.kind not in ("inner", "outer"):
            raise ValueError("window kind must be 'inner' or 'outer'")
        object.__setattr__(self, "origin", (x0, y0))
        object.__setattr__(self, "extent", (w, h))
        object.__setattr__(self, "index", int(self.index))

    @property
    def row_slice(self) -> slice:
        return slice(self.origin[1], self.origin[1] + self.extent[1])

    @property
    def col_slice(self) -> slice:
        return slice(self.origin[0], self.origin[0] + self.extent[0])

    def center(self) -> tuple:
        """Geometric center of the cell in pixel-center coordinates."""
        x0, y0 = self.origin
        w, h = self.extent
        return (x0 + (w - 1) / 2.0, y0 + (h - 1) / 2.0)

    def clip(self, bits: np.ndarray) -> np.ndarray:
        """View of a [row, col] grid restricted to this window."""
        return bits[self.row_slice, self.col_slice]


@dataclass(frozen=True)
class GrowthIncrement:
    """Pixels gained between two frames, ΔS = S_{k+1} \\ S_k."""

    delta_mask: np.ndarray
    barycenter: tuple | None
    interval: tuple

    def __post_init__(self):
        d = np.asarray(self.delta_mask).astype(bool)
        nonempty = bool(d.any())
        if nonempty != (self.barycenter is not None):
            raise ValueError("barycenter must be present iff the delta is nonempty")
        t0, t1 = (float(t) for t in self.interval)
        d.setflags(write=False)
        object.__setattr__(self, "delta_mask", d)
        object.__setattr__(self, "interval", (t0, t1))

    @property
    def pixel_count(self) -> int:
        return int(np.count_nonzero(self.delta_mask))


@dataclass(frozen=True)
class Contour:
    """Boundary polyline in (x, y) pixel centers.

    Consecutive vertices are 8-adjacent and never identical; a spur tip may
    legitimately be followed by an immediate reversal (chain ends).
    """

    points: np.ndarray
    closed: bool

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
            raise ValueError("contour points must be an (n, 2) array")
        if p.shape[0] > 1:
            d = np.abs(np.diff(p, axis=0))
            if self.closed:
                wrap = np.abs(p[0] - p[-1])
                d = np.vstack([d, wrap])
            if np.any(d.max(axis=1) > 1):
                raise ValueError("consecutive contour points must be 8-adjacent")
            if np.any(d.max(axis=1) == 0):
                raise ValueError("consecutive contour points must differ")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def signed_area(self) -> float:
        """Shoelace area; positive for the tracer's output orientation."""
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# -- frame file readers ------------------------------------------------------

def _read_pgm(path: Path) -> np.ndarray:
    """Read P5 (binary) or P2 (ASCII) PGM; nonzero = occupied."""
    data = path.read_bytes()
    if data[:2] not in (b"P5", b"P2"):
        raise ValueError(f"{path}: not a PGM file")
    magic = data[:2]
    # header token scanner that skips whitespace and # comments
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if width < 1 or height < 1:
        raise ValueError(f"{path}: bad PGM dimensions {width}x{height}")
    if magic == b"P5":
        if maxval > 255:
            raise ValueError(f"{path}: 16-bit PGM not supported")
        pos += 1  # single whitespace byte after maxval
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
        return (raster != 0).reshape(height, width)
    vals = np.array(data[pos:].split(), dtype=np.int64)
    if vals.size != width * height:
        raise ValueError(f"{path}: expected {width * height} samples, got {vals.size}")
    return (vals != 0).reshape(height, width)


def _read_csv_grid(path: Path) -> np.ndarray:
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split(",") if "," in line else line.split()
        rows.append([int(float(p)) != 0 for p in parts])
    if not rows:
        raise ValueError(f"{path}: empty grid file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged grid rows")
    return np.array(rows, dtype=bool)


def read_frame_file(path) -> np.ndarray:
    """Load one frame grid; format chosen by content magic, then suffix."""
    path = Path(path)
    if not path.is_file():
        raise MissingFrame(str(path))
    head = path.open("rb").read(2)
    if head in (b"P5", b"P2"):
        return _read_pgm(path)
    return _read_csv_grid(path)


def write_pgm(path, bits: np.ndarray) -> None:
    """Write a bool grid as binary PGM (255 = occupied)."""
    bits = np.asarray(bits).astype(bool)
    h, w = bits.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write((bits.astype(np.uint8) * 255).tobytes())


def load_mask_sequence(manifest_path) -> MaskSequence:
    """Load a manifest JSON and its frame files into a MaskSequence.

    Manifest schema: {"channel": str, "pixel_scale_mm": float|null,
    "frames": [{"path": str, "t_seconds": float}, ...]}; frame paths are
    resolved relative to the manifest. Frames are sorted by timestamp.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise MissingFrame(f"manifest not found: {manifest_path}")
    with open(manifest_path) as fh:
        doc = json.load(fh)
    try:
        channel = doc["channel"]
        entries = doc["frames"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"manifest missing required key: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise ValueError("manifest must list at least one frame")
    scale = doc.get("pixel_scale_mm")
    base = manifest_path.parent

    entries = sorted(entries, key=lambda e: float(e["t_seconds"]))
    frames = []
    for e in entries:
        bits = read_frame_file(base / e["path"])
        frames.append(MaskFrame(bits, float(e["t_seconds"])))

    ts = np.array([f.timestamp for f in frames])
    if ts.size > 1 and not np.all(np.diff(ts) > 0):
        raise NonmonotoneTimestamps("duplicate or non-increasing frame timestamps")
    dims = {f.bits.shape for f in frames}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed frame dimensions: {sorted(dims)}")
    return MaskSequence(tuple(frames), channel, scale)


# -- frame-level operations --------------------------------------------------

def subsample_nonredundant(seq: MaskSequence, min_changed_pixels: int) -> MaskSequence:
    """Keep the first frame, then frames changing enough since the last kept.

    Change is the symmetric-difference pixel count against the last kept
    frame. Threshold 0 returns the input unchanged.
    """
    thr = int(min_changed_pixels)
    if thr < 0:
        raise ValueError("min_changed_pixels must be >= 0")
    if thr == 0:
        return seq
    kept = [seq.frames[0]]
    for frame in seq.frames[1:]:
        changed = int(np.count_nonzero(frame.bits ^ kept[-1].bits))
        if changed >= thr:
            kept.append(frame)
    return MaskSequence(tuple(kept), seq.channel, seq.pixel_scale)


def largest_connected_component(frame: MaskFrame) -> MaskFrame:
    """Largest 8-connected component; size ties go to the component whose
    lexicographically minimal pixel (row, col) is smallest."""
    labeled, n = ndimage.label(frame.bits, structure=_STRUCT8)
    if n == 0:
        raise EmptyMask("no occupied pixels")
    sizes = np.bincount(labeled.ravel())[1:]  # skip background
    best = sizes.max()
    candidates = np.nonzero(sizes == best)[0] + 1
    if candidates.size == 1:
        pick = candidates[0]
    else:
        # first row-major occurrence per candidate label
        flat = labeled.ravel()
        firsts = {lab: np.argmax(flat == lab) for lab in candidates}
        pick = min(candidates, key=lambda lab: firsts[lab])
    return MaskFrame(labeled == pick, frame.timestamp)


# clockwise Moore neighborhood starting at NW, in (drow, dcol)
_NBRS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _moore_trace(bits: np.ndarray) -> np.ndarray:
    """Trace the outer boundary of a connected nonempty mask.

    Returns (n, 2) int array of (row, col) pixels. Termination uses the
    first-edge-repeat rule (Jacob's criterion): stopping merely on return
    to the start pixel drops limbs on spindly shapes.
    """
    padded = np.zeros((bits.shape[0] + 2, bits.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits
    rows, cols = np.nonzero(padded)
    k = np.lexsort((cols, rows))[0]
    start = (int(rows[k]), int(cols[k]))

    def transition(p, b):
        for i in range(8):
            idx = (b + i) % 8
            q = (p[0] + _NBRS[idx][0], p[1] + _NBRS[idx][1])
            if padded[q]:
                return q, (idx + 5) % 8
        return None

    first = transition(start, 0)
    if first is None:
        return np.array([[start[0] - 1, start[1] - 1]])
    points = [start]
    state = first
    while True:
        points.append(state[0])
        state = transition(*state)
        if state == first:
            break
    # the cycle re-enters through the start pixel; drop the duplicate
    if points[-1] == start:
        points.pop()
    return np.array(points) - 1


def external_boundary(component: MaskFrame) -> Contour:
    """Closed Moore-neighbor trace of the outer boundary (holes ignored).

    Starts at the lexicographically minimal (row, col) occupied pixel and
    runs with positive shoelace orientation in (x, y) coordinates.
    """
    labeled, n = ndimage.label(component.bits, structure=_STRUCT8)
    if n == 0:
        raise EmptyMask("cannot trace an empty mask")
    if n > 1:
        raise NotConnected(f"expected one component, found {n}")
    rc = _moore_trace(component.bits)
    xy = rc[:, ::-1].astype(np.float64)
    return Contour(xy, closed=True)


def growth_increment(s_k: MaskFrame, s_k1: MaskFrame) -> GrowthIncrement:
    """One-sided set difference S_{k+1} \\ S_k with its barycenter."""
    if s_k.bits.shape != s_k1.bits.shape:
        raise DimensionMismatch("growth increment needs equal frame dimensions")
    if not s_k1.timestamp > s_k.timestamp:
        raise NonmonotoneTimestamps("frames must be in time order")
    delta = s_k1.bits & ~s_k.bits
    if delta.any():
        rows, cols = np.nonzero(delta)
        bary = (float(cols.mean()), float(rows.mean()))
    else:
        bary = None
    return GrowthIncrement(delta, bary, (s_k.timestamp, s_k1.timestamp))


def mesh_rectangles(frame_dims: tuple, nx: int, ny: int) -> list:
    """All nx*ny mesh cells as (origin, extent, index); exact tiling.

    frame_dims is (height, width); the last row/column absorb remainders.
    """
    h, w = (int(v) for v in frame_dims)
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1 or nx > w or ny > h:
        raise ValueError("mesh must have 1 <= nx <= width, 1 <= ny <= height")
    bw, bh = w // nx, h // ny
    cells = []
    for iy in range(ny):
        for ix in range(nx):
            x0, y0 = ix * bw, iy * bh
            ex = w - x0 if ix == nx - 1 else bw
            ey = h - y0 if iy == ny - 1 else bh
            cells.append(((x0, y0), (ex, ey), iy * nx + ix))
    return cells


def window_mesh(frame_dims: tuple, nx: int, ny: int,
                occupancy_history: MaskSequence) -> list:
    """Mesh cells classified against the history; excluded cells dropped.

    A cell is `outer` iff the external boundary contour of the final
    frame's largest component has a vertex inside it, else `inner` iff it
    holds an occupied pixel at any time, else excluded. Cell indices keep
    their mesh position (iy * nx + ix), so the returned list may be sparse.
    """
    union = np.zeros(frame_dims, dtype=bool)
    for f in occupancy_history.frames:
        union |= f.bits

    boundary_cells = set()
    final = occupancy_history.frames[-1]
    if final.bits.any():
        contour = external_boundary(largest_connected_component(final))
        bw = frame_dims[1] // nx
        bh = frame_dims[0] // ny
        for x, y in contour.points:
            ix = min(int(x) // bw, nx - 1)
            iy = min(int(y) // bh, ny - 1)
            boundary_cells.add(iy * nx + ix)

    windows = []
    for origin, extent, idx in mesh_rectangles(frame_dims, nx, ny):
        if idx in boundary_cells:
            kind = "outer"
        elif union[origin[1]:origin[1] + extent[1],
                   origin[0]:origin[0] + extent[0]].any():
            kind = "inner"
        else:
            continue
        windows.append(WindowSpec(origin, extent, kind, idx))
    return windows


# -- the surrogate driving observable ----------------------------------------

def principal_axis(active_pixels) -> np.ndarray:
    """Dominant direction of a point cloud as a unit (x, y) vector.

    Largest-eigenvalue unit eigenvector of the coordinate covariance.
    Sign convention: x-component >= 0, and y >= 0 when x is 0. An
    eigenvalue tie (isotropic cloud) resolves to (1, 0).
    """
    pts = np.asarray(list(active_pixels) if not isinstance(active_pixels, np.ndarray)
                     else active_pixels, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("active pixels must be (x, y) pairs")
    pts = np.unique(pts, axis=0)
    if pts.shape[0] < 2:
        raise DegenerateCloud("principal axis needs >= 2 distinct points")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / (pts.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    if evals[1] - evals[0] <= 1e-12 * max(evals[1], 1e-300):
        return np.array([1.0, 0.0])
    v = evecs[:, 1]
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return v / np.linalg.norm(v)


def minimal_active_radius(window: WindowSpec, frame: MaskFrame, center) -> tuple:
    """(R_t, M_t): distance from the center to the nearest occupied pixel
    inside the window, and that pixel; ties go to smallest (row, col)."""
    sub = window.clip(frame.bits)
    rows, cols = np.nonzero(sub)
    if rows.size == 0:
        raise NoActivity(f"window {window.index} empty at t={frame.timestamp}")
    xs = cols + window.origin[0]
    ys = rows + window.origin[1]
    cx, cy = (float(c) for c in center)
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    # lexicographic (row, col) among minimal distances; nonzero output of
    # np.nonzero is already row-major sorted, so the first minimum wins
    k = int(np.argmin(d2))
    return float(np.sqrt(d2[k])), (float(xs[k]), float(ys[k]))


def project_displacement(center, m_t, axis) -> float:
    """Signed displacement <M_t - center, axis>; axis must be unit length."""
    a = np.asarray(axis, dtype=np.float64)
    if abs(np.linalg.norm(a) - 1.0) > 1e-12:
        raise NonUnitAxis(f"|axis| = {np.linalg.norm(a)!r}")
    dx = float(m_t[0]) - float(center[0])
    dy = float(m_t[1]) - float(center[1])
    return float(dx * a[0] + dy * a[1])


def window_activity_union(seq: MaskSequence, window: WindowSpec) -> np.ndarray:
    """(x, y) coordinates of every pixel active in the window at any time."""
    acc = np.zeros((window.extent[1], window.extent[0]), dtype=bool)
    for f in seq.frames:
        acc |= window.clip(f.bits)
    rows, cols = np.nonzero(acc)
    return np.column_stack([cols + window.origin[0], rows + window.origin[1]]).astype(float)


def build_surrogate_driver(seq: MaskSequence, window: WindowSpec) -> DrivingFunction:
    """Video-time driving observable for one window.

    Per frame with activity: U_t = <M_t - Omega_W, axis>, where M_t is the
    minimal-radius pixel, Omega_W the window center, and the axis is the
    principal axis of all pixels ever active in the window. Frames without
    activity create segment gaps rather than fabricated samples.
    """
    center = window.center()
    active = []
    for i, frame in enumerate(seq.frames):
        try:
            r, m = minimal_active_radius(window, frame, center)
        except NoActivity:
            continue
        active.append((i, frame.timestamp, m))
    if len(active) < 2:
        raise InsufficientActivity(
            f"window {window.index} active in {len(active)} frame(s); need >= 2")

    axis = principal_axis(window_activity_union(seq, window))
    times = np.array([t for _, t, _ in active])
    values = np.array([project_displacement(center, m, axis) for _, _, m in active])

    segments = []
    run_start = 0
    idx = [i for i, _, _ in active]
    for k in range(1, len(idx)):
        if idx[k] != idx[k - 1] + 1:
            segments.append((run_start, k))
            run_start = k
    segments.append((run_start, len(idx)))
    return DrivingFunction(times, values, VIDEO, tuple(segments))
