"""Time the compiled kernels against the numpy fallback on the workloads of one control tick.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import math
import timeit

import numpy as np

from proxmanip import _kernels as K
from proxmanip.config import Config
from proxmanip.hand import sensor_rays
from proxmanip.world import FREE_TABLE, geometry, preset_contact_pose


def workloads(cfg):
    g = geometry(cfg)
    s = preset_contact_pose(cfg)
    rng = np.random.default_rng(0)
    m = cfg.mppi
    free = np.repeat(FREE_TABLE, m.per_config, axis=0)
    cmds = np.clip(s.joints[np.c_[free[:, 0], 3 + free[:, 1]]][:, None, :]
                   + rng.normal(0, m.motor_noise_sigma, (len(free), m.horizon, 2)), 0, math.pi / 2)
    goal = np.array(cfg.object.goal_position)
    origins, dirs = sensor_rays(s.joints, cfg.hand)
    particles = s.object_position + 3.0 * rng.standard_normal((cfg.filter.n_particles, 2))
    z = rng.uniform(10, 255, 8)
    b = cfg.filter.beam
    rollout = (s.joints, s.object_position, free, cmds, cfg.sim.dt, g, goal, m.a1, m.a2, m.distance_scale, False)
    return {
        "rollout_costs (297 x 10 steps)": ("rollout_costs", rollout),
        "beam_log_likelihood (1000 particles)": (
            "beam_log_likelihood",
            (origins, dirs, particles, z, cfg.object.radius, 10.0, 255.0, 0.0, b.sigma, b.w1, b.w2)),
        "raycast_batch (1000 centres)": ("raycast_batch", (origins, dirs, particles, cfg.object.radius, 10.0, 255.0)),
        "step_batch (297 states)": ("step_batch", (np.repeat(s.joints[None], len(free), 0),
                                                   np.repeat(s.object_position[None], len(free), 0),
                                                   free, cmds[:, 0], cfg.sim.dt, g)),
    }


def best_of(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if K.core is None:
        raise SystemExit("compiled core not built; run `pip install -e .` first")
    cfg = Config()
    print(f"{'kernel':40s} {'cython ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for label, (name, a) in workloads(cfg).items():
        tc = best_of(getattr(K.core, name), a, args.repeat)
        tf = best_of(getattr(K.fallback, name), a, args.repeat)
        print(f"{label:40s} {tc * 1e3:10.3f} {tf * 1e3:10.3f} {tf / tc:8.1f}x")


if __name__ == "__main__":
    main()
