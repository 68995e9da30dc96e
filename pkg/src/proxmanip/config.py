"""Parameter blocks for every module and the YAML experiment config file.

All lengths are in millimetres, angles in radians and times in seconds.
The config file has one mapping per block (``hand``, ``object``, ``sim``,
``sensor``, ``filter``, ``mppi``, ``trial``); missing keys take the defaults
below and unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigError

DEG = math.pi / 180.0
# every default below written out as a commented starting point for experiment configs
DEFAULT_CONFIG_PATH = Path(__file__).with_name("default_config.yaml")


def _pair(v):
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class HandParams:
    """Two mirrored three-link fingers with a four-sensor arc on each tip.

    Finger 0 is the left finger.  ``base_orientations`` are the link headings
    at zero flexion, measured CCW from +x.  The left finger flexes clockwise
    and the right finger counter-clockwise, i.e. both curl toward x = 0.
    The contact surface of a fingertip is the disk of radius
    ``surface_offset`` about the arc centre.
    """

    link_lengths: tuple[float, float, float] = (93.6, 62.4, 46.2)
    base_positions: tuple[tuple[float, float], tuple[float, float]] = ((-146.3, 0.0), (146.3, 0.0))
    base_orientations: tuple[float, float] = (90.0 * DEG + 0.86, 90.0 * DEG - 0.86)
    fingertip_arc_radius: float = 15.0
    sensor_count_per_tip: int = 4
    sensor_angular_spacing: float = 25.0 * DEG
    sensor_range_min: float = 10.0
    sensor_range_max: float = 255.0
    surface_offset: float = 15.0
    joint_limit_low: float = 0.0
    joint_limit_high: float = 90.0 * DEG

    def __post_init__(self):
        object.__setattr__(self, "link_lengths", _pair(self.link_lengths))
        object.__setattr__(self, "base_positions", tuple(_pair(p) for p in self.base_positions))
        object.__setattr__(self, "base_orientations", _pair(self.base_orientations))
        if len(self.link_lengths) != 3 or min(self.link_lengths) <= 0:
            raise ConfigError("link_lengths must be three positive lengths")
        if len(self.base_positions) != 2 or len(self.base_orientations) != 2:
            raise ConfigError("need a base position and orientation for each finger")
        (xl, yl), (xr, yr) = self.base_positions
        if not (math.isclose(xr, -xl) and math.isclose(yr, yl)):
            raise ConfigError("finger bases must mirror across x = 0")
        tl, tr = self.base_orientations
        if not math.isclose(math.remainder(tr - (math.pi - tl), 2 * math.pi), 0.0, abs_tol=1e-12):
            raise ConfigError("finger base orientations must mirror across x = 0")
        if self.fingertip_arc_radius <= 0 or self.surface_offset <= 0:
            raise ConfigError("fingertip radii must be positive")
        if self.sensor_count_per_tip < 1:
            raise ConfigError("sensor_count_per_tip must be >= 1")
        if not 0 < self.sensor_range_min < self.sensor_range_max:
            raise ConfigError("sensor range must satisfy 0 < min < max")
        if not self.joint_limit_low < self.joint_limit_high:
            raise ConfigError("joint limits are inverted")

    @property
    def surface_radius(self) -> float:
        return self.surface_offset

    @property
    def flexion_signs(self) -> tuple[float, float]:
        return (-1.0, 1.0)

    @property
    def sensor_offsets(self) -> np.ndarray:
        """Angles of the sensors about the tip heading, symmetric about it."""
        n = self.sensor_count_per_tip
        return (np.arange(n) - (n - 1) / 2.0) * self.sensor_angular_spacing


@dataclass(frozen=True)
class ObjectParams:
    radius: float = 40.0
    start_position: tuple[float, float] = (-45.0, 45.0)
    goal_position: tuple[float, float] = (45.0, 45.0)

    def __post_init__(self):
        object.__setattr__(self, "start_position", _pair(self.start_position))
        object.__setattr__(self, "goal_position", _pair(self.goal_position))
        if self.radius <= 0:
            raise ConfigError("object radius must be positive")
        sx, sy = self.start_position
        gx, gy = self.goal_position
        if not (math.isclose(gx, -sx) and math.isclose(gy, sy)):
            raise ConfigError("goal must be the mirror of the start across x = 0")


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.2
    joint_rate_limit: float = 0.75
    max_substep: float = 0.02
    resolve_tolerance: float = 1e-3
    max_resolve_iterations: int = 32
    penetration_tolerance: float = 0.1
    contact_tolerance: float = 0.5
    # the palm is the line y = palm_y that the object cannot cross; null disables it
    palm_y: float | None = 0.0
    # per finger joint targets at unit flexion for the preset-contact bisection
    preset_flexion: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (45.0 * DEG, 60.0 * DEG, 90.0 * DEG),
        (81.0 * DEG, 36.0 * DEG, 57.0 * DEG),
    )

    def __post_init__(self):
        object.__setattr__(self, "preset_flexion", tuple(_pair(p) for p in self.preset_flexion))
        if self.dt <= 0 or self.joint_rate_limit <= 0 or self.max_substep <= 0:
            raise ConfigError("dt, joint_rate_limit and max_substep must be positive")
        if self.max_resolve_iterations < 1:
            raise ConfigError("max_resolve_iterations must be >= 1")
        if len(self.preset_flexion) != 2 or any(len(p) != 3 for p in self.preset_flexion):
            raise ConfigError("preset_flexion needs three joint targets per finger")


@dataclass(frozen=True)
class SensorParams:
    """Generative noise of the simulated time-of-flight readings and the sensing mode cut-off."""

    sigma: float = 5.0
    outlier_rate: float = 0.01
    d_tact_max: float = 18.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("sensor sigma must be >= 0")
        if not 0 <= self.outlier_rate < 1:
            raise ConfigError("outlier_rate must lie in [0, 1)")
        if self.d_tact_max <= 0:
            raise ConfigError("d_tact_max must be positive")


@dataclass(frozen=True)
class BeamModelParams:
    sigma: float = 5.0
    w1: float = 0.95
    w2: float = 0.05
    z_max: float = 255.0

    def __post_init__(self):
        if self.sigma <= 0 or self.z_max <= 0:
            raise ConfigError("beam sigma and z_max must be positive")
        if not math.isclose(self.w1 + self.w2, 1.0):
            raise ConfigError("beam mixture weights must sum to 1")


@dataclass(frozen=True)
class FilterParams:
    n_particles: int = 1000
    init_spread: float = 3.0
    rate_hz: float = 18.0
    ess_threshold: float = 0.5
    # covers the gap between the predicted and the realised push, mm per control step
    sigma_motion: float = 2.5
    beam: BeamModelParams = field(default_factory=BeamModelParams)

    def __post_init__(self):
        if isinstance(self.beam, dict):
            object.__setattr__(self, "beam", BeamModelParams(**self.beam))
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if self.sigma_motion <= 0 or self.init_spread < 0 or self.rate_hz <= 0:
            raise ConfigError("filter noise and rate parameters must be positive")
        if not 0 <= self.ess_threshold <= 1:
            raise ConfigError("ess_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class MppiParams:
    num_rollouts: int = 297
    horizon: int = 10
    lam: float = 0.1
    a1: float = 0.1
    a2: float = 200.0
    phi: float = 0.25
    motor_noise_sigma: float = 0.08
    # goal distance enters the cost in metres
    distance_scale: float = 1e-3
    distance_mode: str = "euclidean"

    def __post_init__(self):
        if self.num_rollouts < 9 or self.num_rollouts % 9:
            raise ConfigError("num_rollouts must be a positive multiple of 9")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if not 0 <= self.phi < 1:
            raise ConfigError("phi must lie in [0, 1)")
        if self.motor_noise_sigma < 0:
            raise ConfigError("motor_noise_sigma must be >= 0")
        if self.distance_mode not in ("euclidean", "horizontal"):
            raise ConfigError("distance_mode must be 'euclidean' or 'horizontal'")

    @property
    def per_config(self) -> int:
        return self.num_rollouts // 9


@dataclass(frozen=True)
class TrialParams:
    timeout: float = 60.0
    success_radius: float = 1.0
    control_rate_hz: float = 5.0
    fiducial_jitter: float = 0.5
    # the goal test runs this often while a control step executes
    success_check_hz: float = 30.0

    def __post_init__(self):
        if self.timeout <= 0 or self.success_radius <= 0 or self.control_rate_hz <= 0:
            raise ConfigError("timeout, success_radius and control_rate_hz must be positive")
        if self.success_check_hz < self.control_rate_hz:
            raise ConfigError("success_check_hz must be >= control_rate_hz")
        if self.fiducial_jitter < 0:
            raise ConfigError("fiducial_jitter must be >= 0")


@dataclass(frozen=True)
class Config:
    hand: HandParams = field(default_factory=HandParams)
    object: ObjectParams = field(default_factory=ObjectParams)
    sim: SimParams = field(default_factory=SimParams)
    sensor: SensorParams = field(default_factory=SensorParams)
    filter: FilterParams = field(default_factory=FilterParams)
    mppi: MppiParams = field(default_factory=MppiParams)
    trial: TrialParams = field(default_factory=TrialParams)

    def __post_init__(self):
        if not math.isclose(1.0 / self.trial.control_rate_hz, self.sim.dt):
            raise ConfigError("sim.dt must equal the control period 1 / trial.control_rate_hz")

    def replace(self, **blocks: dict[str, Any]) -> "Config":
        """Copy with some fields of some blocks overridden, e.g. ``replace(mppi={"horizon": 5})``."""
        updated = {}
        for name, changes in blocks.items():
            current = getattr(self, name)
            if name == "filter" and "beam" in changes and isinstance(changes["beam"], dict):
                changes = dict(changes, beam=dataclasses.replace(current.beam, **changes["beam"]))
            updated[name] = dataclasses.replace(current, **changes)
        return dataclasses.replace(self, **updated)

    def to_dict(self) -> dict[str, Any]:
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            return v

        return {f.name: plain(dataclasses.asdict(getattr(self, f.name))) for f in dataclasses.fields(self)}


_BLOCKS = {f.name: f for f in dataclasses.fields(Config)}


def config_from_dict(data: dict[str, Any] | None) -> Config:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - set(_BLOCKS)
    if unknown:
        raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
    default = Config()
    changes = {}
    for name, block in data.items():
        if block is None:
            continue
        if not isinstance(block, dict):
            raise ConfigError(f"config block {name!r} must be a mapping")
        allowed = {f.name for f in dataclasses.fields(getattr(default, name))}
        bad = set(block) - allowed
        if bad:
            raise ConfigError(f"unknown keys in block {name!r}: {sorted(bad)}")
        changes[name] = block
    try:
        return default.replace(**changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: Config, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
