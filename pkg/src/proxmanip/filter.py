"""Particle filter over the cylinder's planar position using the beam mixture model."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .config import BeamModelParams, Config
from .hand import sensor_rays
from .sensors import TACTILE, tactile_truncate


@dataclass(frozen=True)
class ParticleSet:
    positions: np.ndarray
    weights: np.ndarray
    # set when the last measurement update underflowed and weights were reset
    degenerate: bool = False

    def __len__(self):
        return len(self.weights)


def _rng(seed) -> np.random.Generator:
    return seed if hasattr(seed, "random") else np.random.default_rng(seed)


def init_particles(start, spread: float, n: int, seed=None) -> ParticleSet:
    if n < 1:
        raise ValueError("need at least one particle")
    rng = _rng(seed)
    pos = np.asarray(start, dtype=np.float64)[None, :] + spread * rng.standard_normal((n, 2))
    return ParticleSet(pos, np.full(n, 1.0 / n))


def beam_likelihood(z, z_star, params: BeamModelParams):
    """Mixture density w1 N(z; z*, sigma^2) + w2 / z_max (unnormalised over beams)."""
    z = np.asarray(z, dtype=np.float64)
    r = (z - np.asarray(z_star, dtype=np.float64)) / params.sigma
    gauss = np.exp(-0.5 * r * r) / (params.sigma * math.sqrt(2.0 * math.pi))
    return params.w1 * gauss + params.w2 / params.z_max


def log_likelihoods(positions, z, joints, mode: str, cfg: Config, beams=None) -> np.ndarray:
    """Sum of per-beam log densities for each hypothesis, optionally over a subset of beams."""
    beam = cfg.filter.beam
    origins, dirs = sensor_rays(joints, cfg.hand)
    z = np.asarray(z, dtype=np.float64)
    if beams is not None:
        idx = np.atleast_1d(np.asarray(beams, dtype=np.int64))
        origins, dirs, z = origins[idx], dirs[idx], z[idx]
    trunc = 0.0
    if mode == TACTILE:
        trunc = cfg.sensor.d_tact_max
        z = tactile_truncate(z, trunc)
    return K.beam_log_likelihood(origins, dirs, positions, z, cfg.object.radius,
                                 cfg.hand.sensor_range_min, beam.z_max, trunc,
                                 beam.sigma, beam.w1, beam.w2)


def reweight(ps: ParticleSet, loglik: np.ndarray) -> ParticleSet:
    """Multiply weights by exp(loglik) in the log domain and renormalise."""
    with np.errstate(divide="ignore"):
        logw = np.log(ps.weights) + loglik
    top = np.max(logw)
    if not np.isfinite(top):
        n = len(ps)
        return ParticleSet(ps.positions, np.full(n, 1.0 / n), degenerate=True)
    w = np.exp(logw - top)
    return ParticleSet(ps.positions, w / w.sum())


def measurement_update(ps: ParticleSet, z, joints, mode: str, cfg: Config, beams=None) -> ParticleSet:
    return reweight(ps, log_likelihoods(ps.positions, z, joints, mode, cfg, beams))


def motion_update(ps: ParticleSet, expected_delta, sigma_motion: float, rng) -> ParticleSet:
    rng = _rng(rng)
    noise = sigma_motion * rng.standard_normal(ps.positions.shape)
    pos = ps.positions + np.asarray(expected_delta, dtype=np.float64)[None, :] + noise
    return replace(ps, positions=pos, degenerate=False)


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=np.float64)
    return float(1.0 / np.sum(w * w))


def systematic_resample(ps: ParticleSet, rng) -> ParticleSet:
    rng = _rng(rng)
    n = len(ps)
    cdf = np.cumsum(ps.weights)
    cdf[-1] = 1.0
    marks = (rng.random() + np.arange(n)) / n
    idx = np.minimum(np.searchsorted(cdf, marks, side="right"), n - 1)
    return ParticleSet(ps.positions[idx].copy(), np.full(n, 1.0 / n))


def resample_if_needed(ps: ParticleSet, ess_threshold_fraction: float, rng) -> tuple[ParticleSet, bool]:
    """Systematic resampling once the effective sample size drops to the threshold."""
    if effective_sample_size(ps.weights) <= ess_threshold_fraction * len(ps):
        return systematic_resample(ps, rng), True
    return ps, False


def estimate(ps: ParticleSet) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean and weighted covariance of the particle positions."""
    w = ps.weights
    mean = w @ ps.positions
    d = ps.positions - mean
    cov = (w[:, None] * d).T @ d
    return mean, cov


class ParticleFilter:
    """Stateful wrapper used by the trial loop; tracks diagnostics across updates."""

    def __init__(self, cfg: Config, mode: str, rng: np.random.Generator, start=None):
        self.cfg = cfg
        self.mode = mode
        self.rng = rng
        start = cfg.object.start_position if start is None else start
        self.particles = init_particles(start, cfg.filter.init_spread, cfg.filter.n_particles, rng)
        self.max_norm_error = 0.0
        self.n_updates = 0
        self.n_degenerate = 0
        self.n_resamples = 0

    def predict(self, delta) -> None:
        self.particles = motion_update(self.particles, delta, self.cfg.filter.sigma_motion, self.rng)

    def update(self, z, joints) -> None:
        ps = measurement_update(self.particles, z, joints, self.mode, self.cfg)
        self.n_updates += 1
        self.n_degenerate += ps.degenerate
        self.max_norm_error = max(self.max_norm_error, abs(float(ps.weights.sum()) - 1.0))
        ps, did = resample_if_needed(ps, self.cfg.filter.ess_threshold, self.rng)
        self.n_resamples += did
        self.particles = ps

    def estimate(self) -> tuple[np.ndarray, np.ndarray]:
        return estimate(self.particles)

    @property
    def ess(self) -> float:
        return effective_sample_size(self.particles.weights)
