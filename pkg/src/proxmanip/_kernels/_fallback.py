"""Pure numpy implementation of the hot kernels.

Every function here has a twin in ``_core.pyx`` with the same signature and
the same arithmetic; the test-suite checks that both agree.
"""

import math

import numpy as np

from . import _layout as L

BACKEND = "numpy"


def _finger_chain(joints, g, f):
    base = f * L.FINGER_STRIDE
    sign = g[base + L.SIGN]
    x = np.full(joints.shape[0], g[base + L.BASE_X])
    y = np.full(joints.shape[0], g[base + L.BASE_Y])
    ang = np.full(joints.shape[0], g[base + L.THETA0])
    for k in range(3):
        ang = ang + sign * joints[:, 3 * f + k]
        length = g[base + L.LINK0 + k]
        x = x + length * np.cos(ang)
        y = y + length * np.sin(ang)
    return x, y, ang


def tip_poses(joints, g):
    """Fingertip arc centres ``(S, 2, 2)`` and headings ``(S, 2)`` for a joint batch."""
    joints = np.atleast_2d(np.asarray(joints, dtype=np.float64))
    tips = np.empty((joints.shape[0], 2, 2))
    heads = np.empty((joints.shape[0], 2))
    for f in range(2):
        x, y, ang = _finger_chain(joints, g, f)
        tips[:, f, 0] = x
        tips[:, f, 1] = y
        heads[:, f] = ang
    return tips, heads


def _slide(obj, tip, rc, floor, side):
    """Where a push would drive the object through the palm, slide it along the palm instead."""
    h = floor - tip[:, 1]
    below = (obj[:, 1] < floor) & (h * h < rc * rc)
    if not below.any():
        return obj
    w = np.sqrt(np.where(below, rc * rc - h * h, 0.0))
    out = obj.copy()
    out[below, 0] = np.where(side >= 0.0, tip[:, 0] + w, tip[:, 0] - w)[below]
    out[below, 1] = floor
    return out


def _resolve(obj, tips, g):
    """Project object centres out of both fingertip disks; returns (obj, ok)."""
    rc = g[L.OBJ_RADIUS] + g[L.TIP_RADIUS]
    tol = g[L.RESOLVE_TOL]
    floor = g[L.PALM_Y] + g[L.OBJ_RADIUS]
    obj = obj.copy()
    active = np.ones(obj.shape[0], dtype=bool)
    for _ in range(int(g[L.MAX_ITER])):
        if not active.any():
            break
        worst = np.zeros(obj.shape[0])
        for f in range(2):
            d = obj - tips[:, f, :]
            dist = np.hypot(d[:, 0], d[:, 1])
            pen = rc - dist
            push = active & (pen > 0.0)
            if push.any():
                degenerate = push & (dist < 1e-12)
                d[degenerate] = (0.0, 1.0)
                dist = np.where(degenerate, 1.0, dist)
                new = tips[:, f, :] + d / dist[:, None] * rc
                new = _slide(new, tips[:, f, :], rc, floor, d[:, 0])
                obj[push] = new[push]
                worst = np.where(push, np.maximum(worst, pen), worst)
        pen = floor - obj[:, 1]
        push = active & (pen > 0.0)
        obj[push, 1] = floor
        worst = np.where(push, np.maximum(worst, pen), worst)
        active &= worst > tol
    residual = np.zeros(obj.shape[0])
    for f in range(2):
        d = obj - tips[:, f, :]
        residual = np.maximum(residual, rc - np.hypot(d[:, 0], d[:, 1]))
    residual = np.maximum(residual, g[L.PALM_Y] + g[L.OBJ_RADIUS] - obj[:, 1])
    return obj, residual <= g[L.PENETRATION_TOL]


def step_batch(joints, obj, free, cmd, dt, g):
    """Advance a batch of world states by one quasi-static control step.

    ``free`` holds the unbraked joint index (0..2) per finger and ``cmd`` the
    motor target for that joint.  The move is split into substeps no larger
    than ``MAX_SUBSTEP`` rad; a substep that would leave the object jammed
    between the fingertips is discarded and the remaining motion cancelled.
    """
    joints = np.array(joints, dtype=np.float64, copy=True, ndmin=2)
    obj = np.array(obj, dtype=np.float64, copy=True, ndmin=2)
    free = np.asarray(free, dtype=np.int64).reshape(-1, 2)
    cmd = np.asarray(cmd, dtype=np.float64).reshape(-1, 2)
    n = joints.shape[0]
    lo, hi = g[L.Q_LO], g[L.Q_HI]
    max_move = g[L.RATE] * dt
    rows = np.arange(n)
    idx = free + np.array([0, 3])
    start = joints[rows[:, None], idx]
    target = np.clip(cmd, lo, hi)
    delta = np.clip(target - start, -max_move, max_move)
    span = np.max(np.abs(delta), axis=1)
    n_sub = np.maximum(1, np.ceil(span / g[L.MAX_SUBSTEP] - 1e-12)).astype(np.int64)
    running = np.ones(n, dtype=bool)
    for k in range(int(n_sub.max())):
        running &= k < n_sub
        if not running.any():
            break
        frac = (k + 1) / n_sub
        trial = joints.copy()
        trial[rows[:, None], idx] = np.clip(start + delta * frac[:, None], lo, hi)
        tips, _ = tip_poses(trial, g)
        moved, ok = _resolve(obj, tips, g)
        accept = running & ok
        joints[accept] = trial[accept]
        obj[accept] = moved[accept]
        running &= ok
    return joints, obj


def contact_flags(joints, obj, g):
    """Per-fingertip contact flags ``(S, 2)``."""
    tips, _ = tip_poses(joints, g)
    obj = np.atleast_2d(obj)
    rc = g[L.OBJ_RADIUS] + g[L.TIP_RADIUS]
    d = obj[:, None, :] - tips
    return np.hypot(d[..., 0], d[..., 1]) - rc <= g[L.CONTACT_TOL]


def rollout_costs(joints0, obj0, free, cmds, dt, g, goal, a1, a2, dist_scale, horizontal):
    """Simulate every command sequence from one start state and score it.

    ``cmds`` is ``(S, T, 2)``; the trajectory cost is
    ``a1 * sum_{tau=0..T} n_off(s_tau) + a2 * dist_scale * |goal - obj_T|``.
    Returns the costs ``(S,)`` and terminal object positions ``(S, 2)``.
    """
    cmds = np.asarray(cmds, dtype=np.float64)
    n, horizon = cmds.shape[0], cmds.shape[1]
    joints = np.repeat(np.asarray(joints0, dtype=np.float64)[None, :], n, axis=0)
    obj = np.repeat(np.asarray(obj0, dtype=np.float64)[None, :], n, axis=0)
    off = np.zeros(n)
    off += 2 - contact_flags(joints, obj, g).sum(axis=1)
    for t in range(horizon):
        joints, obj = step_batch(joints, obj, free, cmds[:, t, :], dt, g)
        off += 2 - contact_flags(joints, obj, g).sum(axis=1)
    diff = np.asarray(goal, dtype=np.float64)[None, :] - obj
    if horizontal:
        dist = np.abs(diff[:, 0])
    else:
        dist = np.hypot(diff[:, 0], diff[:, 1])
    return a1 * off + a2 * dist_scale * dist, obj


def raycast_batch(origins, dirs, centers, radius, range_min, z_max):
    """Noiseless beam lengths ``(N, M)`` for N circle centres and M rays."""
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    fx = origins[None, :, 0] - centers[:, None, 0]
    fy = origins[None, :, 1] - centers[:, None, 1]
    b = fx * dirs[None, :, 0] + fy * dirs[None, :, 1]
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - c
    hit = disc >= 0.0
    root = np.sqrt(np.where(hit, disc, 0.0))
    t1 = -b - root
    t2 = -b + root
    t = np.where(t1 >= 0.0, t1, t2)
    hit &= t >= 0.0
    out = np.where(hit, np.clip(t, range_min, z_max), z_max)
    return out


def beam_log_likelihood(origins, dirs, centers, z, radius, range_min, z_max,
                        truncate_at, sigma, w1, w2):
    """Sum over beams of log(w1 N(z; z*, sigma^2) + w2 / z_max) per centre.

    ``truncate_at <= 0`` disables truncation of the expected beams.
    """
    zs = raycast_batch(origins, dirs, centers, radius, range_min, z_max)
    if truncate_at > 0.0:
        zs = np.minimum(zs, truncate_at)
    z = np.asarray(z, dtype=np.float64)
    r = (z[None, :] - zs) / sigma
    norm = w1 / (sigma * math.sqrt(2.0 * math.pi))
    dens = norm * np.exp(-0.5 * r * r) + w2 / z_max
    return np.log(dens).sum(axis=1)
