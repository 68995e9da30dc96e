import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxmanip.config import Config, HandParams
from proxmanip.errors import ConfigError
from proxmanip.hand import (fingertip_surface_distance, forward_kinematics, mirror_joints,
                            sensor_frames, sensor_rays)

joint_vectors = st.lists(st.floats(0.0, math.pi / 2), min_size=6, max_size=6).map(np.array)


def transform_chain_tip(base, theta0, sign, lengths, angles):
    """Independent oracle: compose 3x3 homogeneous transforms link by link."""
    def rot(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def trans(x, y):
        return np.array([[1.0, 0.0, x], [0.0, 1.0, y], [0.0, 0.0, 1.0]])

    T = trans(*base) @ rot(theta0)
    for length, a in zip(lengths, angles):
        T = T @ rot(sign * a) @ trans(length, 0.0)
    return T[:2, 2]


def test_zero_angles_fully_extended(cfg):
    pose = forward_kinematics(np.zeros(6), cfg.hand)
    for f in range(2):
        base = np.array(cfg.hand.base_positions[f])
        d = np.hypot(*(pose.tips[f] - base))
        assert d == pytest.approx(sum(cfg.hand.link_lengths), abs=1e-9)
        assert pose.headings[f] == pytest.approx(cfg.hand.base_orientations[f])


def test_left_first_joint_quarter_turn_matches_transform_oracle(cfg):
    q = np.array([math.pi / 2, 0, 0, 0, 0, 0])
    tip = forward_kinematics(q, cfg.hand).tips[0]
    h = cfg.hand
    expect = transform_chain_tip(h.base_positions[0], h.base_orientations[0], -1.0, h.link_lengths, q[:3])
    np.testing.assert_allclose(tip, expect, atol=1e-9)
    # first link rotated a quarter turn, remaining links along that heading
    ang = h.base_orientations[0] - math.pi / 2
    manual = np.array(h.base_positions[0]) + sum(h.link_lengths) * np.array([math.cos(ang), math.sin(ang)])
    np.testing.assert_allclose(tip, manual, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(joint_vectors)
def test_matches_transform_oracle(q):
    h = HandParams()
    pose = forward_kinematics(q, h)
    for f, sign in enumerate((-1.0, 1.0)):
        expect = transform_chain_tip(h.base_positions[f], h.base_orientations[f], sign, h.link_lengths,
                                     q[3 * f:3 * f + 3])
        np.testing.assert_allclose(pose.tips[f], expect, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(joint_vectors)
def test_mirror_symmetry(q):
    h = HandParams()
    a = forward_kinematics(q, h)
    b = forward_kinematics(mirror_joints(q), h)
    flip = np.array([-1.0, 1.0])
    np.testing.assert_allclose(b.points[::-1] * flip, a.points, atol=1e-9)
    oa, da = sensor_rays(q, h)
    ob, db = sensor_rays(mirror_joints(q), h)
    # the mirror swaps finger blocks and reverses the CCW order inside each block
    perm = [7, 6, 5, 4, 3, 2, 1, 0]
    np.testing.assert_allclose(ob[perm] * flip, oa, atol=1e-9)
    np.testing.assert_allclose(db[perm] * flip, da, atol=1e-12)


def test_sensor_arc_geometry(cfg, rng):
    for _ in range(50):
        q = rng.uniform(0, math.pi / 2, 6)
        pose = forward_kinematics(q, cfg.hand)
        frames = sensor_frames(q, cfg.hand)
        assert len(frames) == 8
        for f in range(2):
            centre = pose.tips[f]
            block = frames[4 * f:4 * f + 4]
            angles = []
            for fr in block:
                r = fr.origin - centre
                assert np.hypot(*r) == pytest.approx(15.0, abs=1e-9)
                assert np.hypot(*fr.direction) == pytest.approx(1.0, abs=1e-12)
                assert np.dot(fr.direction, r) == pytest.approx(15.0, abs=1e-9)
                angles.append(math.atan2(r[1], r[0]))
            gaps = np.diff(np.unwrap(angles))
            np.testing.assert_allclose(gaps, math.radians(25.0), atol=1e-9)
            # arc centred on the heading
            mid = np.mean(np.unwrap(angles))
            assert math.remainder(mid - pose.headings[f], 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_surface_distance_examples(cfg):
    q = np.full(6, 0.3)
    tip = forward_kinematics(q, cfg.hand).tips[0]
    assert fingertip_surface_distance(tip, q, cfg.hand) == pytest.approx(-15.0)
    p = tip + 20.0 * np.array([math.cos(1.0), math.sin(1.0)])
    assert fingertip_surface_distance(p, q, cfg.hand) == pytest.approx(5.0)


def test_surface_distance_vs_dense_sampling(cfg, rng):
    phi = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    ring = np.stack([np.cos(phi), np.sin(phi)], 1) * cfg.hand.surface_radius
    for _ in range(30):
        q = rng.uniform(0, math.pi / 2, 6)
        tips = forward_kinematics(q, cfg.hand).tips
        p = tips[rng.integers(2)] + rng.uniform(-60, 60, 2)
        pts = np.concatenate([tips[0] + ring, tips[1] + ring])
        oracle = np.min(np.hypot(*(pts - p).T))
        inside = any(np.hypot(*(p - t)) < cfg.hand.surface_radius for t in tips)
        d = fingertip_surface_distance(p, q, cfg.hand)
        if inside:
            assert d < 0
        else:
            # 1e4 samples on a 15 mm circle leave at most ~1e-5 mm chord error
            assert d == pytest.approx(oracle, abs=1e-4)


def test_deterministic_and_continuous(cfg, rng):
    total = sum(cfg.hand.link_lengths) + cfg.hand.fingertip_arc_radius
    for _ in range(20):
        q = rng.uniform(0.01, 1.5, 6)
        a1, d1 = sensor_rays(q, cfg.hand)
        a2, d2 = sensor_rays(q.copy(), cfg.hand)
        assert np.array_equal(a1, a2) and np.array_equal(d1, d2)
        dq = np.zeros(6)
        dq[rng.integers(6)] = 1e-6
        b, _ = sensor_rays(q + dq, cfg.hand)
        assert np.max(np.hypot(*(b - a1).T)) < 1e-3
        assert np.max(np.hypot(*(b - a1).T)) <= 1e-6 * total * 3


def test_hand_params_validation():
    with pytest.raises(ConfigError):
        HandParams(link_lengths=(50, -1, 50))
    with pytest.raises(ConfigError):
        HandParams(base_positions=((-60, 0), (50, 0)))
    h = HandParams()
    assert h.sensor_count_per_tip == 4
    assert h.sensor_angular_spacing == pytest.approx(math.radians(25))
    assert (h.joint_limit_low, h.joint_limit_high) == (0.0, pytest.approx(math.pi / 2))
    assert (h.sensor_range_min, h.sensor_range_max) == (10.0, 255.0)
    np.testing.assert_allclose(np.degrees(h.sensor_offsets), [-37.5, -12.5, 12.5, 37.5])
    assert Config().hand.surface_radius == 15.0
