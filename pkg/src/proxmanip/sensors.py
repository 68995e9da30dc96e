"""Thin-beam time-of-flight readings of the cylinder from the fingertip sensors."""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .config import HandParams, SensorParams
from .hand import SensorFrame, sensor_rays

PROXIMITY = "proximity"
TACTILE = "tactile"
SENSING_MODES = (PROXIMITY, TACTILE)


def raycast_cylinder(frame: SensorFrame, center, radius: float, z_max: float,
                     range_min: float = 0.0) -> float:
    """Length of a single beam to the circle ``(center, radius)``.

    The smallest non-negative hit distance, clamped to ``[range_min, z_max]``;
    ``z_max`` when the ray misses or the circle lies behind the origin.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    o = np.asarray(frame.origin, dtype=np.float64)
    d = np.asarray(frame.direction, dtype=np.float64)
    fx, fy = o - np.asarray(center, dtype=np.float64)
    b = fx * d[0] + fy * d[1]
    disc = b * b - (fx * fx + fy * fy - radius * radius)
    if disc < 0.0:
        return float(z_max)
    root = math.sqrt(disc)
    t = -b - root
    if t < 0.0:
        t = -b + root
    if t < 0.0:
        return float(z_max)
    return float(min(max(t, range_min), z_max))


def tactile_truncate(z, d_tact_max: float) -> np.ndarray:
    return np.minimum(np.asarray(z, dtype=np.float64), d_tact_max)


def expected_measurements(joints, obj, hand: HandParams, radius: float) -> np.ndarray:
    """Noiseless readings of all 8 beams for the cylinder centred at ``obj``."""
    origins, dirs = sensor_rays(joints, hand)
    return K.raycast_batch(origins, dirs, np.asarray(obj, dtype=np.float64)[None],
                           radius, hand.sensor_range_min, hand.sensor_range_max)[0]


def expected_measurements_batch(joints, centers, hand: HandParams, radius: float) -> np.ndarray:
    """Noiseless readings ``(N, 8)`` for N hypothesised cylinder centres."""
    origins, dirs = sensor_rays(joints, hand)
    return K.raycast_batch(origins, dirs, centers, radius, hand.sensor_range_min, hand.sensor_range_max)


def simulate_measurements(joints, obj, hand: HandParams, radius: float, noise: SensorParams,
                          mode: str, rng: np.random.Generator) -> np.ndarray:
    """One noisy reading per beam.

    Gaussian noise is added to the expected reading; with probability
    ``outlier_rate`` a beam is replaced by a uniform draw over the sensor
    range.  The same number of random draws is consumed on every call so that
    streams stay aligned across sensing modes.
    """
    if mode not in SENSING_MODES:
        raise ValueError(f"unknown sensing mode {mode!r}")
    lo, hi = hand.sensor_range_min, hand.sensor_range_max
    z = expected_measurements(joints, obj, hand, radius)
    gauss = rng.standard_normal(z.shape)
    pick = rng.random(z.shape)
    spare = rng.uniform(lo, hi, z.shape)
    z = z + noise.sigma * gauss
    z = np.where(pick < noise.outlier_rate, spare, z)
    z = np.clip(z, lo, hi)
    if mode == TACTILE:
        z = tactile_truncate(z, noise.d_tact_max)
    return z
