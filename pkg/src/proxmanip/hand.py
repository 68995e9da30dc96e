"""Planar forward kinematics of the two-fingered hand and its fingertip sensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import HandParams

N_SENSORS = 8


@dataclass(frozen=True)
class SensorFrame:
    origin: np.ndarray
    direction: np.ndarray


@dataclass(frozen=True)
class HandPose:
    """Result of forward kinematics.

    ``points[f]`` holds the base and the three link end points of finger f,
    so ``points[f, 3]`` is the fingertip arc centre.  ``headings[f]`` is the
    direction of the last link (rad, CCW from +x).
    """

    points: np.ndarray
    headings: np.ndarray

    @property
    def tips(self) -> np.ndarray:
        return self.points[:, 3, :]


def as_joints(joints) -> np.ndarray:
    q = np.asarray(joints, dtype=np.float64).reshape(-1)
    if q.shape != (6,):
        raise ValueError(f"expected 6 joint angles, got shape {np.shape(joints)}")
    return q


def forward_kinematics(joints, params: HandParams) -> HandPose:
    q = as_joints(joints)
    points = np.empty((2, 4, 2))
    headings = np.empty(2)
    for f, sign in enumerate(params.flexion_signs):
        p = np.array(params.base_positions[f])
        ang = params.base_orientations[f]
        points[f, 0] = p
        for k, length in enumerate(params.link_lengths):
            ang = ang + sign * q[3 * f + k]
            p = p + length * np.array([np.cos(ang), np.sin(ang)])
            points[f, k + 1] = p
        headings[f] = ang
    return HandPose(points, headings)


def sensor_rays(joints, params: HandParams) -> tuple[np.ndarray, np.ndarray]:
    """Origins and unit directions ``(8, 2)`` of all sensor beams.

    Order is left sensors then right sensors, each block sorted by increasing
    (CCW) angle about the fingertip heading.
    """
    pose = forward_kinematics(joints, params)
    offsets = params.sensor_offsets
    ang = (pose.headings[:, None] + offsets[None, :]).reshape(-1)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    centres = np.repeat(pose.tips, len(offsets), axis=0)
    return centres + params.fingertip_arc_radius * dirs, dirs


def sensor_frames(joints, params: HandParams) -> list[SensorFrame]:
    origins, dirs = sensor_rays(joints, params)
    return [SensorFrame(o, d) for o, d in zip(origins, dirs)]


def fingertip_surface_distance(point, joints, params: HandParams) -> float:
    """Signed distance from ``point`` to the nearest fingertip contact surface."""
    tips = forward_kinematics(joints, params).tips
    d = np.hypot(*(np.asarray(point, dtype=np.float64)[None, :] - tips).T)
    return float(d.min() - params.surface_radius)


def mirror_joints(joints) -> np.ndarray:
    """Joint vector of the mirror-image hand pose (finger blocks swapped)."""
    q = as_joints(joints)
    return np.concatenate([q[3:], q[:3]])
