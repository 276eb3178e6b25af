"""Seeded synthetic inputs: Brownian drivers, SLE traces, sample laws.

All randomness flows through RandomSource: a PCG64 uniform stream mapped
through deterministic inverse CDFs (no rejection loops), so a seed pins
the byte-exact output stream and consuming N gaussians always advances
the stream by exactly N uniforms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .driving import CAPACITY, DrivingFunction
from .errors import NegativeKappa, NonpositiveAlpha
from .loewner import Trace, forward_solve
from .masks import MaskFrame, MaskSequence

ALGORITHM_ID = "pcg64-inverse-cdf"

# shifts uniforms off 0 so inverse CDFs stay finite; keeps them below 1
_U_SHIFT = 2.0 ** -54


@dataclass
class RandomSource:
    """Single-consumer seeded uniform stream (PCG64)."""

    seed: int
    algorithm_id: str = ALGORITHM_ID
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.algorithm_id != ALGORITHM_ID:
            raise ValueError(f"unknown generator algorithm {self.algorithm_id!r}")
        self._gen = np.random.Generator(np.random.PCG64(int(self.seed)))

    def uniforms(self, n: int) -> np.ndarray:
        """n uniforms on the open interval (0, 1)."""
        return self._gen.random(int(n)) + _U_SHIFT

    def normals(self, n: int) -> np.ndarray:
        """n standard gaussians via the inverse-CDF transform."""
        return ndtri(self.uniforms(n))


def brownian_driving(kappa: float, total_time: float, n_steps: int,
                     src: RandomSource) -> DrivingFunction:
    """sqrt(kappa) x Brownian motion sampled on n_steps equal capacity steps.

    U_0 = 0; increments are i.i.d. N(0, kappa dt) with dt = total_time/n.
    """
    if kappa < 0:
        raise NegativeKappa(f"kappa = {kappa}")
    if not total_time > 0:
        raise ValueError("total_time must be > 0")
    n = int(n_steps)
    if n < 1:
        raise ValueError("n_steps must be >= 1")
    dt = total_time / n
    inc = np.sqrt(kappa * dt) * src.normals(n)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    times = np.linspace(0.0, total_time, n + 1)
    return DrivingFunction(times, values, CAPACITY)


def sle_trace(kappa: float, total_time: float, n_steps: int,
              src: RandomSource, samples_per_step: int = 1) -> Trace:
    """Trace of the Loewner flow driven by sqrt(kappa) B_t.

    Discretization keeps the driver constant per step, so the sampled
    polyline can self-cross numerically even for kappa < 4; use
    loewner.count_self_intersections to quantify rather than hide this.
    """
    if kappa < 0:
        raise NegativeKappa(f"kappa = {kappa}")
    driver = brownian_driving(kappa, total_time, n_steps, src)
    return forward_solve(driver, samples_per_step=samples_per_step)


def pareto_samples(alpha: float, n: int, src: RandomSource) -> np.ndarray:
    """i.i.d. samples with survival function x^(-alpha), x >= 1.

    Inverse transform x = u^(-1/alpha). alpha = 2 is accepted: it is the
    boundary of the normal domain of attraction, still heavy-tailed here.
    """
    if not alpha > 0:
        raise NonpositiveAlpha(f"alpha = {alpha}")
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    return src.uniforms(int(n)) ** (-1.0 / alpha)


def gaussian_samples(sigma: float, n: int, src: RandomSource) -> np.ndarray:
    """i.i.d. N(0, sigma^2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    return sigma * src.normals(int(n))


def growing_disk_sequence(width: int = 120, height: int = 120,
                          center: tuple = (60.0, 60.0),
                          r_start: float = 8.0, r_end: float = 52.0,
                          n_frames: int = 40, frame_seconds: float = 60.0,
                          channel: str = "brightening") -> MaskSequence:
    """Deterministic radially growing disk, the pipeline's ground truth.

    Every window of a mesh sees a front that approaches its center
    monotonically, which pins down the expected behavior of the surrogate
    driver (monotone, near-constant increments) without any statistics.
    """
    if n_frames < 2:
        raise ValueError("need at least 2 frames")
    cx, cy = center
    yy, xx = np.mgrid[0:height, 0:width]
    d2 = (xx - cx) ** 2 + (yy - cy) ** 2
    radii = np.linspace(r_start, r_end, n_frames)
    frames = tuple(
        MaskFrame(d2 <= r * r, k * frame_seconds)
        for k, r in enumerate(radii)
    )
    return MaskSequence(frames, channel)
