"""Chordal Loewner machinery for piecewise-constant driving.

The driver is held constant over each step, so every step removes a
vertical slit and the one-step flow has the closed form

    G(z) = u + sqrt((z - u)^2 + 4 dt)      (maps the slit complement to H)
    F(w) = u + sqrt((w - u)^2 - 4 dt)      (its inverse)

with the square-root branch chosen so images stay in the closed upper
half-plane and real points keep their side of u. Composing the F maps
latest-first turns a driver into a trace; peeling points off a curve with
G maps (the zipper) turns a curve back into a driver.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .driving import CAPACITY, DrivingFunction
from .errors import (
    CurveLeavesHalfPlane,
    InsufficientPoints,
    NonCapacityTime,
    NonpositiveFactor,
    NumericalBlowup,
    SelfTouch,
    TipHit,
    ZeroStep,
)

# Trace points may dip this far below the axis before we call it an error;
# rasterized inputs carry sub-pixel noise but nothing should be truly below.
IM_FLOOR = -1e-12
# How close to the axis the first trace point must sit.
BASE_EPS = 1e-9

_FMT = "%.17g"


@dataclass(frozen=True)
class SlitStep:
    """One constant-driver step: value u over a capacity-time increment dt.

    dt = 0 is tolerated as a degenerate step whose maps are the identity;
    steps decomposed from a driver always have dt > 0.
    """

    u: float
    dt: float

    def __post_init__(self):
        if not (np.isfinite(self.u) and np.isfinite(self.dt)):
            raise ValueError("slit step parameters must be finite")
        if self.dt < 0:
            raise ValueError("slit step needs dt >= 0")

    @property
    def tip(self) -> complex:
        """Tip of the removed slit, u + 2i sqrt(dt)."""
        return complex(self.u, 2.0 * np.sqrt(self.dt))


@dataclass(frozen=True)
class Trace:
    """An ordered planar curve attached to the real axis.

    points: complex samples, first one on the real axis (|Im| <= 1e-9),
    none below Im = -1e-12. base is the real attachment point.
    """

    points: np.ndarray
    base: float = None  # type: ignore[assignment]

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.complex128)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("a trace needs a 1-D array of at least one point")
        if not np.all(np.isfinite(p)):
            raise ValueError("trace points must be finite")
        if abs(p[0].imag) > BASE_EPS:
            raise CurveLeavesHalfPlane(
                f"first trace point {p[0]} is not on the real axis")
        if p.imag.min() < IM_FLOOR:
            raise CurveLeavesHalfPlane(
                f"trace dips to Im = {p.imag.min():g} below the axis")
        base = p[0].real if self.base is None else float(self.base)
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "base", base)

    @property
    def n_points(self) -> int:
        return self.points.size

    def to_csv(self, path) -> None:
        """Write ``re,im`` rows at 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im"])
            for z in self.points:
                w.writerow([_FMT % z.real, _FMT % z.imag])

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header != ["re", "im"]:
                raise ValueError(f"unexpected trace CSV header: {header}")
            pts = [complex(float(row[0]), float(row[1])) for row in r if row]
        return cls(np.array(pts))


def _directed_sqrt(zeta, side):
    """sqrt with image in the closed upper half-plane.

    When both roots are real (zeta real >= 0 can arise for real inputs),
    the sign of `side` (= Re(z - u)) picks the root on the input's side,
    so the maps fix the two ends of the real axis.
    """
    s = np.sqrt(zeta)
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real != 0) & (side < 0))
    return np.where(flip, -s, s)


def _map_out(z, u, dt):
    """Vectorized G: remove the slit of step (u, dt)."""
    w = z - u
    return u + _directed_sqrt(w * w + 4.0 * dt, w.real)


def _map_in(z, u, dt):
    """Vectorized F = G^{-1}: grow the slit of step (u, dt)."""
    w = z - u
    return u + _directed_sqrt(w * w - 4.0 * dt, w.real)


def elementary_map(z: complex, step: SlitStep) -> complex:
    """One-step mapping-out map G applied to a single point.

    The slit tip u + 2i sqrt(dt) maps to u. Points strictly inside the
    removed slit have no well-defined image (both branches are real) and
    raise TipHit.
    """
    zc = complex(z)
    if zc.imag < IM_FLOOR:
        raise CurveLeavesHalfPlane(f"{z} is below the real axis")
    w = zc - step.u
    if w.real == 0.0 and 0.0 < w.imag < 2.0 * np.sqrt(step.dt):
        raise TipHit(f"{z} lies strictly inside the removed slit")
    return complex(_map_out(np.array([zc]), step.u, step.dt)[0])


def inverse_elementary_map(z: complex, step: SlitStep) -> complex:
    """One-step inverse map F; the image of step.u is the slit tip."""
    zc = complex(z)
    if zc.imag < IM_FLOOR:
        raise CurveLeavesHalfPlane(f"{z} is below the real axis")
    return complex(_map_in(np.array([zc]), step.u, step.dt)[0])


def driving_steps(driving: DrivingFunction) -> list:
    """Decompose a capacity-time driver into SlitSteps.

    Step k runs from t_{k-1} to t_k and is driven by the right-endpoint
    value U_k.
    """
    if driving.time_kind != CAPACITY:
        raise NonCapacityTime("slit decomposition needs a capacity-time driver")
    dts = np.diff(driving.times)
    return [SlitStep(float(u), float(dt))
            for u, dt in zip(driving.values[1:], dts)]


def forward_solve(driving: DrivingFunction, samples_per_step: int = 1) -> Trace:
    """Drive the Loewner flow and return the trace.

    The trace point at step boundary t_k is the composition of inverse
    elementary maps, latest first, applied to that step's tip seed
    U_k + 2i sqrt(dt_k); with samples_per_step = m > 1, each step also
    emits m - 1 interior points from partially grown slits. The seed is
    exact for the final map, which is how the tip singularity is handled.

    All pending points advance through each F jointly as one vectorized
    operation (they are independent of each other), and the branch choice
    keeps every intermediate image in the closed upper half-plane.
    """
    if driving.time_kind != CAPACITY:
        raise NonCapacityTime("forward_solve needs a capacity-time driver")
    if driving.n_samples < 2:
        raise ValueError("forward_solve needs at least 2 samples")
    m = int(samples_per_step)
    if m < 1:
        raise ValueError("samples_per_step must be >= 1")

    dts = np.diff(driving.times)
    us = np.asarray(driving.values[1:], dtype=np.float64)
    n = dts.size

    # Seed block k holds the m partial-slit points of step k; only the
    # full-step maps F_j (j < k) act on it afterwards.
    frac = np.arange(1, m + 1) / m
    seeds = (us[:, None] + 2j * np.sqrt(dts[:, None] * frac[None, :])).ravel()

    z = seeds
    for j in range(n - 2, -1, -1):
        z[(j + 1) * m:] = _map_in(z[(j + 1) * m:], us[j], dts[j])

    if not np.all(np.isfinite(z)):
        raise NumericalBlowup("forward Loewner flow produced non-finite points")
    points = np.concatenate([[complex(driving.values[0])], z])
    return Trace(points)


def inverse_driving(curve) -> DrivingFunction:
    """Recover a capacity-time driver from a curve (discrete zipper).

    Peels one point per step: with w_k the current image of the k-th
    curve point, record u_k = Re(w_k) and dt_k = (Im w_k)^2 / 4, then
    flatten that slit from all remaining points with G. The output driver
    has times [0, cumsum(dt)] and values [base, u_1, ..].
    """
    pts = curve.points if isinstance(curve, Trace) else np.asarray(curve, dtype=complex)
    if pts.ndim != 1:
        raise ValueError("curve must be a 1-D point sequence")
    if pts.size < 3:
        raise InsufficientPoints(f"zipper needs >= 3 points, got {pts.size}")
    if abs(pts[0].imag) > BASE_EPS:
        raise CurveLeavesHalfPlane("curve must start on the real axis")
    if pts.imag.min() < IM_FLOOR:
        raise CurveLeavesHalfPlane(
            f"curve dips to Im = {pts.imag.min():g} below the axis")
    if np.any(pts[1:] == pts[:-1]):
        k = int(np.nonzero(pts[1:] == pts[:-1])[0][0])
        raise ZeroStep(f"consecutive identical points at index {k}")

    base = float(pts[0].real)
    w = pts[1:].astype(np.complex128, copy=True)
    n = w.size
    us = np.empty(n)
    dts = np.empty(n)
    for k in range(n):
        wk = w[k]
        if not (np.isfinite(wk.real) and np.isfinite(wk.imag)):
            raise NumericalBlowup(f"unzipped image not finite at step {k}")
        if wk.imag <= 0.0:
            raise SelfTouch(
                f"unzipped curve meets the real axis at step {k} (w = {wk})")
        us[k] = wk.real
        dts[k] = wk.imag * wk.imag / 4.0
        if k + 1 < n:
            w[k + 1:] = _map_out(w[k + 1:], us[k], dts[k])

    times = np.concatenate([[0.0], np.cumsum(dts)])
    values = np.concatenate([[base], us])
    return DrivingFunction(times, values, CAPACITY)


def hcap_total(driving: DrivingFunction) -> float:
    """Total half-plane capacity of the hull, 2 x (elapsed capacity time)."""
    if driving.time_kind != CAPACITY:
        raise NonCapacityTime("hcap is defined on capacity-time drivers")
    return 2.0 * float(driving.times[-1] - driving.times[0])


def rescale_capacity(driving: DrivingFunction, spatial_factor: float) -> DrivingFunction:
    """Spatial scaling z -> r z at the driver level: values x r, times x r^2."""
    r = float(spatial_factor)
    if not np.isfinite(r) or r <= 0:
        raise NonpositiveFactor(f"spatial factor must be > 0, got {spatial_factor}")
    if driving.time_kind != CAPACITY:
        raise NonCapacityTime("capacity rescaling needs a capacity-time driver")
    return DrivingFunction(driving.times * (r * r), driving.values * r,
                           CAPACITY, driving.segments)


def count_self_intersections(points) -> int:
    """Count proper crossings between non-adjacent segments of a polyline.

    Touching or collinear overlaps do not count; only transversal
    crossings do. Quadratic scan, vectorized in blocks.
    """
    p = points.points if isinstance(points, Trace) else np.asarray(points, dtype=complex)
    if p.size < 4:
        return 0
    a, b = p[:-1], p[1:]
    total = 0

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    nseg = a.size
    for i in range(nseg - 2):
        c = a[i + 2:]
        d = b[i + 2:]
        d1 = cross(b[i] - a[i], c - a[i])
        d2 = cross(b[i] - a[i], d - a[i])
        d3 = cross(d - c, a[i] - c)
        d4 = cross(d - c, b[i] - c)
        total += int(np.count_nonzero((d1 * d2 < 0) & (d3 * d4 < 0)))
    return total
