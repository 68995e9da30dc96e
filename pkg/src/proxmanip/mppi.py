"""Sampling-based predictive control over motor commands and brake configurations.

For each of the nine brake configurations a batch of perturbed copies of
that configuration's nominal command sequence is rolled out in the
simulator.  Each batch is collapsed into one softmin-weighted sequence, the
nine averaged sequences are scored by rolling them out again, and the
executed configuration only changes when another one is clearly cheaper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import Config, MppiParams
from .world import ALL_BRAKE_CONFIGS, FREE_TABLE, HybridAction, WorldState, detect_contacts, geometry

N_CONFIGS = len(ALL_BRAKE_CONFIGS)


@dataclass(frozen=True)
class ActionSequence:
    brake_index: int
    motor_commands: np.ndarray

    @property
    def brakes(self):
        return ALL_BRAKE_CONFIGS[self.brake_index]


@dataclass(frozen=True)
class ControllerState:
    nominal: np.ndarray  # (9, horizon, 2)
    active: int | None = None
    active_cost: float | None = None


def goal_distance(obj, goal, mode: str = "euclidean"):
    d = np.asarray(goal, dtype=np.float64) - np.asarray(obj, dtype=np.float64)
    if mode == "horizontal":
        return np.abs(d[..., 0])
    return np.hypot(d[..., 0], d[..., 1])


def trajectory_cost(states: list[WorldState], cfg: Config, goal) -> float:
    """a1 * (fingertips off the object, summed over all states) + a2 * terminal goal distance."""
    p = cfg.mppi
    off = sum(2 - sum(detect_contacts(s, cfg)) for s in states)
    dist = goal_distance(states[-1].object_position, goal, p.distance_mode)
    return float(p.a1 * off + p.a2 * p.distance_scale * dist)


def initial_state(joints, params: MppiParams) -> ControllerState:
    """Nominal sequences that hold every free joint where it is."""
    q = np.asarray(joints, dtype=np.float64)
    nominal = np.empty((N_CONFIGS, params.horizon, 2))
    for c, (i, j) in enumerate(FREE_TABLE):
        nominal[c, :, 0] = q[i]
        nominal[c, :, 1] = q[3 + j]
    return ControllerState(nominal)


def sample_sequences(ctrl: ControllerState, params: MppiParams, rng, lo: float = 0.0,
                     hi: float = np.pi / 2) -> np.ndarray:
    """Perturbed command sequences ``(9, K, horizon, 2)``; sample 0 of each config is the nominal."""
    k = params.per_config
    noise = params.motor_noise_sigma * rng.standard_normal((N_CONFIGS, k, params.horizon, 2))
    noise[:, 0] = 0.0
    return np.clip(ctrl.nominal[:, None] + noise, lo, hi)


def rollout_batch(joints, obj, sequences, cfg: Config, goal, free=None) -> np.ndarray:
    """Cost of every sequence rolled out from the same start state.

    ``sequences`` is ``(..., horizon, 2)``; when ``free`` is omitted the leading
    axis is taken to index the nine brake configurations.
    """
    seqs = np.asarray(sequences, dtype=np.float64)
    lead = seqs.shape[:-2]
    if free is None:
        if lead[0] != N_CONFIGS:
            raise ValueError("leading axis must index the 9 brake configurations")
        free = np.broadcast_to(FREE_TABLE.reshape((N_CONFIGS,) + (1,) * (len(lead) - 1) + (2,)), lead + (2,))
    free = np.ascontiguousarray(np.reshape(free, (-1, 2)), dtype=np.int64)
    p = cfg.mppi
    costs, _ = K.rollout_costs(np.asarray(joints, dtype=np.float64), np.asarray(obj, dtype=np.float64),
                               free, seqs.reshape((-1,) + seqs.shape[-2:]), cfg.sim.dt, geometry(cfg),
                               np.asarray(goal, dtype=np.float64), p.a1, p.a2, p.distance_scale,
                               p.distance_mode == "horizontal")
    return costs.reshape(lead)


def softmin_weights(costs, lam: float) -> np.ndarray:
    c = np.asarray(costs, dtype=np.float64)
    w = np.exp(-(c - c.min()) / lam)
    return w / w.sum()


def mppi_average(sequences, costs, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Softmin-weighted average of K sequences ``(K, horizon, 2)``; returns (average, weights)."""
    w = softmin_weights(costs, lam)
    return np.tensordot(w, np.asarray(sequences, dtype=np.float64), axes=1), w


def select_action(ctrl: ControllerState, averaged: np.ndarray, costs, params: MppiParams):
    """Pick the brake configuration to execute and advance the controller state.

    The first call takes the cheapest configuration.  Afterwards another
    configuration replaces the active one only if its cost is below
    ``(1 - phi)`` times the active cost.  Every nominal sequence is shifted
    by one step, repeating its last command.
    """
    costs = np.asarray(costs, dtype=np.float64)
    best = int(np.argmin(costs))
    if ctrl.active is None:
        active = best
    else:
        active = ctrl.active
        if best != active and costs[best] < (1.0 - params.phi) * costs[active]:
            active = best
    cmd = averaged[active, 0]
    action = HybridAction((float(cmd[0]), float(cmd[1])), ALL_BRAKE_CONFIGS[active])
    nominal = np.concatenate([averaged[:, 1:], averaged[:, -1:]], axis=1)
    return action, ControllerState(nominal, active, float(costs[active]))


class MppiController:
    def __init__(self, cfg: Config, rng: np.random.Generator, goal=None):
        self.cfg = cfg
        self.rng = rng
        self.goal = np.asarray(cfg.object.goal_position if goal is None else goal, dtype=np.float64)
        self.state: ControllerState | None = None

    def reset(self, joints) -> None:
        self.state = initial_state(joints, self.cfg.mppi)

    def act(self, joints, obj_estimate) -> tuple[HybridAction, dict]:
        """One control tick from true joints and an estimated object position."""
        if self.state is None:
            self.reset(joints)
        p = self.cfg.mppi
        hand = self.cfg.hand
        seqs = sample_sequences(self.state, p, self.rng, hand.joint_limit_low, hand.joint_limit_high)
        costs = rollout_batch(joints, obj_estimate, seqs, self.cfg, self.goal)
        averaged = np.empty((N_CONFIGS, p.horizon, 2))
        for c in range(N_CONFIGS):
            averaged[c], _ = mppi_average(seqs[c], costs[c], p.lam)
        # guards against round-off just outside the joint travel
        np.clip(averaged, hand.joint_limit_low, hand.joint_limit_high, out=averaged)
        avg_costs = rollout_batch(joints, obj_estimate, averaged, self.cfg, self.goal)
        prev = self.state.active
        action, self.state = select_action(self.state, averaged, avg_costs, p)
        info = {
            "costs": avg_costs,
            "active": self.state.active,
            "switched": prev is not None and prev != self.state.active,
        }
        return action, info
