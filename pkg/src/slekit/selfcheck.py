"""Fast analytic release gate.

Each named criterion checks one closed-form or exactly-known property in
well under a minute total, prints one PASS/FAIL line, and never touches
the filesystem. `perturb=True` is a test hook that injects a small error
into the elementary-map check to prove the gate can fail loudly.
"""
from __future__ import annotations

import numpy as np

from . import diagnostics as dg
from .driving import CAPACITY, DrivingFunction
from .loewner import (
    SlitStep,
    elementary_map,
    forward_solve,
    hcap_total,
    inverse_driving,
    rescale_capacity,
)
from .synth import RandomSource, brownian_driving


def _zero_driver(n: int = 200, T: float = 1.0) -> DrivingFunction:
    t = np.linspace(0.0, T, n + 1)
    return DrivingFunction(t, np.zeros(n + 1), CAPACITY)


def _check_slit_forward():
    trace = forward_solve(_zero_driver())
    tip = trace.points[-1]
    assert abs(tip - 2j) <= 1e-6, f"slit tip {tip} is not 2i"
    assert hcap_total(_zero_driver()) == 2.0, "hcap of unit-time hull must be 2"


def _check_slit_roundtrip():
    trace = forward_solve(_zero_driver())
    rec = inverse_driving(trace)
    assert np.max(np.abs(rec.values)) <= 1e-9, "zero driver not recovered"
    assert abs(rec.times[-1] - 1.0) <= 1e-9, "capacity time not recovered"


def _check_scaling():
    u = brownian_driving(2.0, 1.0, 64, RandomSource(1234))
    pts = forward_solve(u).points
    direct = inverse_driving(2.0 * pts)
    scaled = rescale_capacity(inverse_driving(pts), 2.0)
    assert np.allclose(direct.values, scaled.values, rtol=1e-9, atol=1e-12)
    assert np.allclose(direct.times, scaled.times, rtol=1e-9, atol=1e-15)


def _check_elementary_hcap(perturb: bool):
    # far-field expansion: G(z) = z + 2 dt / z + O(1/z^2)
    step = SlitStep(0.0, 0.25)
    z = 1e6 + 1e6j
    g = elementary_map(z, step)
    if perturb:
        g += 1e-3
    err = abs(g - z - 2.0 * step.dt / z)
    assert err <= 1e-6 * step.dt, f"far-field hcap coefficient off by {err:g}"


def _check_parseval():
    src = RandomSource(7)
    psd = dg.welch_psd(src.normals(4096), dt=0.5)
    assert psd.parseval_rel_error <= 1e-9, (
        f"Parseval error {psd.parseval_rel_error:g}")


def _check_theil_sen_exact():
    f = np.geomspace(1.0, 100.0, 24)
    slope, _ = dg.theil_sen(np.log(f), np.log(f ** -2.0))
    assert abs(slope + 2.0) <= 1e-12, f"exact power law slope {slope}"


def _check_hill_invariance():
    x = RandomSource(11).uniforms(4000) ** (-1.0 / 1.5)
    a = dg.hill_estimator(x, 200).alpha_hat
    b = dg.hill_estimator(1e7 * x, 200).alpha_hat
    assert abs(a - b) <= 1e-12 * a, "Hill estimate not scale invariant"


def _check_qq_fixed_point():
    from scipy.special import ndtri
    q = ndtri((np.arange(1, 501) - 0.5) / 500)
    dev = dg.qq_against_normal(3.0 * q + 1.0).max_deviation
    assert dev <= 1e-9, f"quantile fixed point deviates by {dev:g}"


def _check_kappa_map():
    for kappa in np.linspace(0.0, 8.0, 17):
        back = dg.kappa_from_dimension(1.0 + kappa / 8.0)
        assert abs(back - kappa) <= 1e-12, f"kappa map broke at {kappa}"


def _check_segment_dimension():
    t = np.linspace(0.0, 500.0, 10_000)
    pts = np.column_stack([t, 0.25 * t])
    est = dg.box_counting_dimension(pts)
    assert abs(est.D - 1.0) <= 0.05, f"segment dimension {est.D:.3f}"


CRITERIA = (
    ("slit-forward", _check_slit_forward),
    ("slit-roundtrip", _check_slit_roundtrip),
    ("conformal-scaling", _check_scaling),
    ("elementary-map-hcap", _check_elementary_hcap),
    ("parseval", _check_parseval),
    ("theil-sen-exact", _check_theil_sen_exact),
    ("hill-scale-invariance", _check_hill_invariance),
    ("qq-fixed-point", _check_qq_fixed_point),
    ("kappa-dimension-map", _check_kappa_map),
    ("segment-dimension", _check_segment_dimension),
)


def run_selfcheck(perturb: bool = False, emit=print) -> int:
    """Run every criterion; returns the number of failures."""
    failures = 0
    for name, check in CRITERIA:
        try:
            if check is _check_elementary_hcap:
                check(perturb)
            else:
                check()
        except AssertionError as exc:
            failures += 1
            emit(f"FAIL {name}: {exc}")
        except Exception as exc:  # an estimator blowing up is also a failure
            failures += 1
            emit(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            emit(f"PASS {name}")
    return failures
