# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: batched quasi-static stepping, MPPI rollouts and beam likelihoods.

Mirrors ``_fallback.py`` function for function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, exp, log, ceil, fabs, hypot, M_PI

cnp.import_array()

BACKEND = "cython"

DEF FINGER_STRIDE = 7
DEF BASE_X = 0
DEF BASE_Y = 1
DEF THETA0 = 2
DEF SIGN = 3
DEF LINK0 = 4
DEF TIP_RADIUS = 14
DEF OBJ_RADIUS = 15
DEF Q_LO = 16
DEF Q_HI = 17
DEF RATE = 18
DEF MAX_SUBSTEP = 19
DEF RESOLVE_TOL = 20
DEF MAX_ITER = 21
DEF PENETRATION_TOL = 22
DEF CONTACT_TOL = 23
DEF PALM_Y = 24


cdef inline double _clip(double v, double lo, double hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef void _tips(const double* q, const double[::1] g, double* tips, double* heads) noexcept nogil:
    cdef int f, k, base
    cdef double x, y, ang, sign
    for f in range(2):
        base = f * FINGER_STRIDE
        sign = g[base + SIGN]
        x = g[base + BASE_X]
        y = g[base + BASE_Y]
        ang = g[base + THETA0]
        for k in range(3):
            ang = ang + sign * q[3 * f + k]
            x = x + g[base + LINK0 + k] * cos(ang)
            y = y + g[base + LINK0 + k] * sin(ang)
        tips[2 * f] = x
        tips[2 * f + 1] = y
        heads[f] = ang


cdef inline void _slide(double* o, const double* tip, double rc, double floor_, double side) noexcept nogil:
    # a push that would drive the object through the palm slides it along the palm instead
    cdef double h, w
    if o[1] >= floor_:
        return
    h = floor_ - tip[1]
    if h * h >= rc * rc:
        return
    w = sqrt(rc * rc - h * h)
    o[0] = tip[0] + w if side >= 0.0 else tip[0] - w
    o[1] = floor_


cdef bint _resolve(double* o, const double* tips, const double[::1] g) noexcept nogil:
    cdef double rc = g[OBJ_RADIUS] + g[TIP_RADIUS]
    cdef double tol = g[RESOLVE_TOL]
    cdef int it, f
    cdef int max_iter = <int>g[MAX_ITER]
    cdef double dx, dy, dist, pen, worst, residual
    cdef double floor_ = g[PALM_Y] + g[OBJ_RADIUS]
    for it in range(max_iter):
        worst = 0.0
        for f in range(2):
            dx = o[0] - tips[2 * f]
            dy = o[1] - tips[2 * f + 1]
            dist = hypot(dx, dy)
            pen = rc - dist
            if pen > 0.0:
                if dist < 1e-12:
                    dx = 0.0
                    dy = 1.0
                    dist = 1.0
                o[0] = tips[2 * f] + dx / dist * rc
                o[1] = tips[2 * f + 1] + dy / dist * rc
                _slide(o, &tips[2 * f], rc, floor_, dx)
                if pen > worst:
                    worst = pen
        pen = floor_ - o[1]
        if pen > 0.0:
            o[1] = floor_
            if pen > worst:
                worst = pen
        if not (worst > tol):
            break
    residual = 0.0
    for f in range(2):
        dx = o[0] - tips[2 * f]
        dy = o[1] - tips[2 * f + 1]
        pen = rc - hypot(dx, dy)
        if pen > residual:
            residual = pen
    pen = g[PALM_Y] + g[OBJ_RADIUS] - o[1]
    if pen > residual:
        residual = pen
    return residual <= g[PENETRATION_TOL]


cdef void _step(double* q, double* o, const long* free, const double* cmd, double dt,
                const double[::1] g) noexcept nogil:
    cdef double lo = g[Q_LO]
    cdef double hi = g[Q_HI]
    cdef double max_move = g[RATE] * dt
    cdef double start[2]
    cdef double delta[2]
    cdef double trial[6]
    cdef double ot[2]
    cdef double tips[4]
    cdef double heads[2]
    cdef int idx[2]
    cdef int f, k, j, n_sub
    cdef double span, frac
    for f in range(2):
        idx[f] = <int>free[f] + 3 * f
        start[f] = q[idx[f]]
        delta[f] = _clip(_clip(cmd[f], lo, hi) - start[f], -max_move, max_move)
    span = fabs(delta[0])
    if fabs(delta[1]) > span:
        span = fabs(delta[1])
    n_sub = <int>ceil(span / g[MAX_SUBSTEP] - 1e-12)
    if n_sub < 1:
        n_sub = 1
    for k in range(n_sub):
        frac = (k + 1) / <double>n_sub
        for j in range(6):
            trial[j] = q[j]
        for f in range(2):
            trial[idx[f]] = _clip(start[f] + delta[f] * frac, lo, hi)
        _tips(trial, g, tips, heads)
        ot[0] = o[0]
        ot[1] = o[1]
        if not _resolve(ot, tips, g):
            break
        for j in range(6):
            q[j] = trial[j]
        o[0] = ot[0]
        o[1] = ot[1]


cdef int _n_off(const double* q, const double* o, const double[::1] g) noexcept nogil:
    cdef double tips[4]
    cdef double heads[2]
    cdef double rc = g[OBJ_RADIUS] + g[TIP_RADIUS]
    cdef int f, off = 0
    _tips(q, g, tips, heads)
    for f in range(2):
        if hypot(o[0] - tips[2 * f], o[1] - tips[2 * f + 1]) - rc > g[CONTACT_TOL]:
            off += 1
    return off


def tip_poses(joints, const double[::1] g):
    cdef const double[:, ::1] q = np.ascontiguousarray(np.atleast_2d(joints), dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0], s
    out_tips = np.empty((n, 2, 2))
    out_heads = np.empty((n, 2))
    cdef double[:, :, ::1] tv = out_tips
    cdef double[:, ::1] hv = out_heads
    for s in range(n):
        _tips(&q[s, 0], g, &tv[s, 0, 0], &hv[s, 0])
    return out_tips, out_heads


def step_batch(joints, obj, free, cmd, double dt, const double[::1] g):
    qa = np.array(joints, dtype=np.float64, copy=True, ndmin=2, order="C")
    oa = np.array(obj, dtype=np.float64, copy=True, ndmin=2, order="C")
    cdef double[:, ::1] q = qa
    cdef double[:, ::1] o = oa
    cdef const long[:, ::1] fr = np.ascontiguousarray(np.asarray(free, dtype=np.int64).reshape(-1, 2), dtype=np.int64)
    cdef const double[:, ::1] c = np.ascontiguousarray(np.asarray(cmd, dtype=np.float64).reshape(-1, 2))
    cdef Py_ssize_t s, n = q.shape[0]
    with nogil:
        for s in range(n):
            _step(&q[s, 0], &o[s, 0], &fr[s, 0], &c[s, 0], dt, g)
    return qa, oa


def contact_flags(joints, obj, const double[::1] g):
    cdef const double[:, ::1] q = np.ascontiguousarray(np.atleast_2d(joints), dtype=np.float64)
    cdef const double[:, ::1] o = np.ascontiguousarray(np.atleast_2d(obj), dtype=np.float64)
    cdef Py_ssize_t s, n = q.shape[0]
    cdef double tips[4]
    cdef double heads[2]
    cdef double rc = g[OBJ_RADIUS] + g[TIP_RADIUS]
    cdef int f
    out = np.empty((n, 2), dtype=bool)
    cdef cnp.npy_bool[:, ::1] ov = out.view(np.uint8)
    for s in range(n):
        _tips(&q[s, 0], g, tips, heads)
        for f in range(2):
            ov[s, f] = hypot(o[s, 0] - tips[2 * f], o[s, 1] - tips[2 * f + 1]) - rc <= g[CONTACT_TOL]
    return out


def rollout_costs(joints0, obj0, free, cmds, double dt, const double[::1] g, goal,
                  double a1, double a2, double dist_scale, bint horizontal):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(cmds, dtype=np.float64)
    cdef const long[:, ::1] fr = np.ascontiguousarray(np.asarray(free, dtype=np.int64).reshape(-1, 2), dtype=np.int64)
    cdef const double[::1] q0 = np.ascontiguousarray(joints0, dtype=np.float64)
    cdef const double[::1] o0 = np.ascontiguousarray(obj0, dtype=np.float64)
    cdef double gx = goal[0]
    cdef double gy = goal[1]
    cdef Py_ssize_t n = c.shape[0], horizon = c.shape[1], s, t
    costs = np.empty(n)
    final = np.empty((n, 2))
    cdef double[::1] cv = costs
    cdef double[:, ::1] fv = final
    cdef double q[6]
    cdef double o[2]
    cdef int j, off, off0
    cdef double dist
    with nogil:
        off0 = _n_off(&q0[0], &o0[0], g)
        for s in range(n):
            for j in range(6):
                q[j] = q0[j]
            o[0] = o0[0]
            o[1] = o0[1]
            off = off0
            for t in range(horizon):
                _step(q, o, &fr[s, 0], &c[s, t, 0], dt, g)
                off = off + _n_off(q, o, g)
            if horizontal:
                dist = fabs(gx - o[0])
            else:
                dist = hypot(gx - o[0], gy - o[1])
            cv[s] = a1 * off + a2 * dist_scale * dist
            fv[s, 0] = o[0]
            fv[s, 1] = o[1]
    return costs, final


cdef inline double _ray(double ox, double oy, double dx, double dy, double cx, double cy,
                        double radius, double range_min, double z_max) noexcept nogil:
    cdef double fx = ox - cx
    cdef double fy = oy - cy
    cdef double b = fx * dx + fy * dy
    cdef double cc = fx * fx + fy * fy - radius * radius
    cdef double disc = b * b - cc
    cdef double root, t
    if disc < 0.0:
        return z_max
    root = sqrt(disc)
    t = -b - root
    if not (t >= 0.0):
        t = -b + root
    if not (t >= 0.0):
        return z_max
    return _clip(t, range_min, z_max)


def raycast_batch(origins, dirs, centers, double radius, double range_min, double z_max):
    cdef const double[:, ::1] org = np.ascontiguousarray(origins, dtype=np.float64)
    cdef const double[:, ::1] dr = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef const double[:, ::1] cen = np.ascontiguousarray(np.atleast_2d(centers), dtype=np.float64)
    cdef Py_ssize_t n = cen.shape[0], m = org.shape[0], i, j
    out = np.empty((n, m))
    cdef double[:, ::1] ov = out
    with nogil:
        for i in range(n):
            for j in range(m):
                ov[i, j] = _ray(org[j, 0], org[j, 1], dr[j, 0], dr[j, 1],
                                cen[i, 0], cen[i, 1], radius, range_min, z_max)
    return out


def beam_log_likelihood(origins, dirs, centers, z, double radius, double range_min, double z_max,
                        double truncate_at, double sigma, double w1, double w2):
    cdef const double[:, ::1] org = np.ascontiguousarray(origins, dtype=np.float64)
    cdef const double[:, ::1] dr = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef const double[:, ::1] cen = np.ascontiguousarray(np.atleast_2d(centers), dtype=np.float64)
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = cen.shape[0], m = org.shape[0], i, j
    cdef double norm = w1 / (sigma * sqrt(2.0 * M_PI))
    cdef double floor_ = w2 / z_max
    cdef double zs, r, acc
    out = np.empty(n)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                zs = _ray(org[j, 0], org[j, 1], dr[j, 0], dr[j, 1],
                          cen[i, 0], cen[i, 1], radius, range_min, z_max)
                if truncate_at > 0.0 and zs > truncate_at:
                    zs = truncate_at
                r = (zv[j] - zs) / sigma
                acc = acc + log(norm * exp(-0.5 * r * r) + floor_)
            ov[i] = acc
    return out
