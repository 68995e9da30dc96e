"""Quasi-static planar simulator of the hand and the cylinder.

The cylinder has no inertia and no friction.  During a control step the free
joint of each finger moves toward its motor command at a bounded rate, in
small substeps; after every substep the cylinder is projected out of both
fingertip disks (and above the palm) until no overlap remains.  A substep
that cannot be resolved, because the cylinder is wedged between the tips,
is discarded and the rest of the motion is cancelled.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._kernels import _layout as L
from .config import Config, HandParams, ObjectParams, SimParams
from .errors import RejectedActionError, UnreachableError
from .hand import as_joints, forward_kinematics


@dataclass(frozen=True)
class BrakeConfig:
    """Which joint (1..3) of each finger has its brake released."""

    off_joint_left: int
    off_joint_right: int

    def __post_init__(self):
        if self.off_joint_left not in (1, 2, 3) or self.off_joint_right not in (1, 2, 3):
            raise ValueError("unbraked joint indices must be in {1, 2, 3}")

    @property
    def free(self) -> tuple[int, int]:
        """Zero-based unbraked joint index within each finger."""
        return self.off_joint_left - 1, self.off_joint_right - 1

    @property
    def index(self) -> int:
        return 3 * (self.off_joint_left - 1) + self.off_joint_right - 1

    @classmethod
    def from_index(cls, i: int) -> "BrakeConfig":
        return ALL_BRAKE_CONFIGS[i]


ALL_BRAKE_CONFIGS = tuple(BrakeConfig(i, j) for i in (1, 2, 3) for j in (1, 2, 3))
FREE_TABLE = np.array([c.free for c in ALL_BRAKE_CONFIGS], dtype=np.int64)


@dataclass(frozen=True)
class HybridAction:
    motor_commands: tuple[float, float]
    brakes: BrakeConfig

    def __post_init__(self):
        object.__setattr__(self, "motor_commands", tuple(float(c) for c in self.motor_commands))


@dataclass(frozen=True)
class WorldState:
    joints: np.ndarray
    object_position: np.ndarray
    joint_velocities: np.ndarray = field(default_factory=lambda: np.zeros(6))
    object_velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "joints", as_joints(self.joints).copy())
        object.__setattr__(self, "object_position", np.asarray(self.object_position, dtype=np.float64).reshape(2).copy())
        object.__setattr__(self, "joint_velocities", np.asarray(self.joint_velocities, dtype=np.float64).reshape(6).copy())
        object.__setattr__(self, "object_velocity", np.asarray(self.object_velocity, dtype=np.float64).reshape(2).copy())

    def with_object(self, position) -> "WorldState":
        return WorldState(self.joints, position, self.joint_velocities, self.object_velocity)


@functools.lru_cache(maxsize=32)
def kernel_geometry(hand: HandParams, obj: ObjectParams, sim: SimParams) -> np.ndarray:
    """Flat parameter vector consumed by the compiled kernels."""
    g = np.zeros(L.GEOM_SIZE)
    for f in range(2):
        b = f * L.FINGER_STRIDE
        g[b + L.BASE_X], g[b + L.BASE_Y] = hand.base_positions[f]
        g[b + L.THETA0] = hand.base_orientations[f]
        g[b + L.SIGN] = hand.flexion_signs[f]
        g[b + L.LINK0:b + L.LINK0 + 3] = hand.link_lengths
    g[L.TIP_RADIUS] = hand.surface_radius
    g[L.OBJ_RADIUS] = obj.radius
    g[L.Q_LO] = hand.joint_limit_low
    g[L.Q_HI] = hand.joint_limit_high
    g[L.RATE] = sim.joint_rate_limit
    g[L.MAX_SUBSTEP] = sim.max_substep
    g[L.RESOLVE_TOL] = sim.resolve_tolerance
    g[L.MAX_ITER] = sim.max_resolve_iterations
    g[L.PENETRATION_TOL] = sim.penetration_tolerance
    g[L.CONTACT_TOL] = sim.contact_tolerance
    g[L.PALM_Y] = -math.inf if sim.palm_y is None else sim.palm_y
    g.flags.writeable = False
    return g


def geometry(cfg: Config) -> np.ndarray:
    return kernel_geometry(cfg.hand, cfg.object, cfg.sim)


def check_action(action: HybridAction, hand: HandParams) -> None:
    for c in action.motor_commands:
        if not (hand.joint_limit_low <= c <= hand.joint_limit_high):
            raise RejectedActionError(
                f"motor command {c!r} outside [{hand.joint_limit_low}, {hand.joint_limit_high}]")


def step(state: WorldState, action: HybridAction, cfg: Config, dt: float | None = None) -> WorldState:
    check_action(action, cfg.hand)
    dt = cfg.sim.dt if dt is None else dt
    q, o = K.step_batch(state.joints[None], state.object_position[None],
                        np.array([action.brakes.free]), np.array([action.motor_commands]),
                        dt, geometry(cfg))
    q, o = q[0], o[0]
    return WorldState(q, o, (q - state.joints) / dt, (o - state.object_position) / dt)


def detect_contacts(state: WorldState, cfg: Config) -> tuple[bool, bool]:
    flags = K.contact_flags(state.joints[None], state.object_position[None], geometry(cfg))[0]
    return bool(flags[0]), bool(flags[1])


def surface_gaps(state: WorldState, cfg: Config) -> np.ndarray:
    """Distance between each fingertip surface and the cylinder surface (mm)."""
    tips = forward_kinematics(state.joints, cfg.hand).tips
    d = np.hypot(*(state.object_position[None, :] - tips).T)
    return d - cfg.hand.surface_radius - cfg.object.radius


def _flex(profile, s, hi):
    return np.minimum(s * np.asarray(profile), hi)


def preset_contact_pose(cfg: Config, scan_points: int = 401, s_max: float = 2.0) -> WorldState:
    """Flex each finger along its preset profile until it touches the cylinder at the start pose.

    For finger f the joints are ``min(s * preset_flexion[f], joint_limit_high)``;
    the smallest s at which the gap closes is found by a coarse scan followed
    by bisection, and the pose just outside the surface is returned.
    """
    start = np.array(cfg.object.start_position)
    q = np.zeros(6)
    rc = cfg.hand.surface_radius + cfg.object.radius
    hi = cfg.hand.joint_limit_high
    for f in range(2):
        profile = cfg.sim.preset_flexion[f]

        def gap(s):
            qq = q.copy()
            qq[3 * f:3 * f + 3] = _flex(profile, s, hi)
            tip = forward_kinematics(qq, cfg.hand).tips[f]
            return float(np.hypot(*(start - tip)) - rc)

        ss = np.linspace(0.0, s_max, scan_points)
        prev = gap(ss[0])
        if prev <= 0.0:
            raise UnreachableError(f"finger {f} already overlaps the object at zero flexion")
        found = None
        for k in range(1, len(ss)):
            cur = gap(ss[k])
            if cur <= 0.0:
                found = (ss[k - 1], ss[k])
                break
        if found is None:
            raise UnreachableError(f"finger {f} never reaches the object along its preset profile")
        lo, up = found
        for _ in range(80):
            mid = 0.5 * (lo + up)
            if gap(mid) > 0.0:
                lo = mid
            else:
                up = mid
        q[3 * f:3 * f + 3] = _flex(profile, lo, hi)
    state = WorldState(q, start)
    if not all(detect_contacts(state, cfg)):
        raise UnreachableError("preset pose does not put both fingertips in contact")
    return state
