"""Seeded trials, full experiments and the metrics written to disk."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import Config
from .errors import ProxmanipError
from .filter import ParticleFilter
from .mppi import MppiController
from .sensors import PROXIMITY, TACTILE, simulate_measurements
from .stats import mann_whitney_u
from .world import WorldState, detect_contacts, preset_contact_pose, step

FIDUCIAL = "fiducial"
MODES = (FIDUCIAL, PROXIMITY, TACTILE)

TRIAL_COLUMNS = [
    "mode", "seed", "success", "final_goal_distance", "final_goal_distance_horizontal",
    "avg_pose_error", "exec_time", "ticks", "final_x", "final_y",
    "filter_updates", "degenerate_updates", "max_weight_norm_error",
]
SUMMARY_COLUMNS = [
    "mode", "trials", "successes",
    "avg_pose_error_mean", "avg_pose_error_std",
    "goal_dist_n", "goal_dist_mean", "goal_dist_std",
    "exec_time_n", "exec_time_mean", "exec_time_std",
    "u_avg_pose_error", "p_avg_pose_error", "u_goal_dist", "p_goal_dist",
]


class IncompleteExperimentError(ProxmanipError):
    """Raised when an experiment stops before every trial has finished."""

    def __init__(self, message, results):
        super().__init__(message)
        self.results = results


@dataclass
class TrialResult:
    mode: str
    seed: int
    success: bool
    final_goal_distance: float
    final_goal_distance_horizontal: float
    avg_pose_error: float
    exec_time: float
    ticks: int
    final_position: tuple[float, float]
    pose_error_trace: list[tuple[float, float]] = field(default_factory=list)
    filter_updates: int = 0
    degenerate_updates: int = 0
    max_weight_norm_error: float = 0.0
    # tactile trials truncate both the simulated readings and the filter's expected readings
    tactile_truncation: bool = False
    diagnostic: str = ""

    def row(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "success": int(self.success),
            "final_goal_distance": _fmt(self.final_goal_distance),
            "final_goal_distance_horizontal": _fmt(self.final_goal_distance_horizontal),
            "avg_pose_error": _fmt(self.avg_pose_error),
            "exec_time": _fmt(self.exec_time),
            "ticks": self.ticks,
            "final_x": _fmt(self.final_position[0]),
            "final_y": _fmt(self.final_position[1]),
            "filter_updates": self.filter_updates,
            "degenerate_updates": self.degenerate_updates,
            "max_weight_norm_error": f"{self.max_weight_norm_error:.3e}",
        }


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.6f}"


def _floats(a) -> list:
    return [float(x) for x in np.ravel(a)]


def trial_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for one trial; the same seed gives the same streams in every mode."""
    names = ("sensor", "filter", "controller", "jitter")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def subticks(tick: int, filter_hz: float, control_hz: float) -> int:
    """Filter updates that fall within control tick ``tick``."""
    ratio = filter_hz / control_hz
    return math.floor((tick + 1) * ratio + 1e-9) - math.floor(tick * ratio + 1e-9)


def _record(tick, dt, prev, est, cov, ess, action, info, z, cfg):
    return {
        "tick": tick,
        "time": tick * dt,
        "joints": _floats(prev.joints),
        "object": _floats(prev.object_position),
        "estimate": _floats(est),
        "covariance": _floats(cov),
        "ess": ess,
        "contacts": list(detect_contacts(prev, cfg)),
        "action": {"brakes": [action.brakes.off_joint_left, action.brakes.off_joint_right],
                   "motor_commands": list(action.motor_commands)},
        "costs": _floats(info["costs"]),
        "active": info["active"],
        "switched": info["switched"],
        "measurements": None if z is None else _floats(z),
    }


def run_trial(cfg: Config, mode: str, seed: int, trace_path: str | Path | None = None) -> TrialResult:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    state = preset_contact_pose(cfg)
    rngs = trial_streams(seed)
    ctrl = MppiController(cfg, rngs["controller"])
    ctrl.reset(state.joints)
    pf = None if mode == FIDUCIAL else ParticleFilter(cfg, mode, rngs["filter"])
    goal = np.array(cfg.object.goal_position)
    dt = cfg.sim.dt
    n_ticks = int(round(cfg.trial.timeout * cfg.trial.control_rate_hz))
    trace = []
    records = []
    success = False
    elapsed = cfg.trial.timeout
    n_checks = max(1, int(round(cfg.trial.success_check_hz / cfg.trial.control_rate_hz)))
    tick = 0
    z = None
    for tick in range(n_ticks):
        truth = state.object_position
        if pf is None:
            est = truth + cfg.trial.fiducial_jitter * rngs["jitter"].standard_normal(2)
            cov = np.eye(2) * cfg.trial.fiducial_jitter ** 2
            ess = None
        else:
            est, cov = pf.estimate()
            ess = pf.ess
        trace.append((tick * dt, float(np.hypot(*(est - truth)))))

        action, info = ctrl.act(state.joints, est)
        prev = state
        # the commanded step runs in slices so the goal test sees the motion within a tick
        for k in range(n_checks):
            state = step(state, action, cfg, dt / n_checks)
            if abs(goal[0] - state.object_position[0]) < cfg.trial.success_radius:
                success = True
                elapsed = tick * dt + (k + 1) * dt / n_checks
                break
        if success:
            if trace_path is not None:
                records.append(_record(tick, dt, prev, est, cov, ess, action, info, z, cfg))
            break

        if pf is not None:
            # expected displacement from replaying the action on the estimated state
            guess = step(WorldState(prev.joints, est), action, cfg)
            pf.predict(guess.object_position - est)
            for _ in range(subticks(tick, cfg.filter.rate_hz, cfg.trial.control_rate_hz)):
                z = simulate_measurements(state.joints, state.object_position, cfg.hand,
                                          cfg.object.radius, cfg.sensor, mode, rngs["sensor"])
                pf.update(z, state.joints)

        if trace_path is not None:
            records.append(_record(tick, dt, prev, est, cov, ess, action, info, z, cfg))

    ticks = tick + 1
    diff = goal - state.object_position
    result = TrialResult(
        mode=mode,
        seed=seed,
        success=success,
        final_goal_distance=float(np.hypot(*diff)),
        final_goal_distance_horizontal=float(abs(diff[0])),
        avg_pose_error=float(np.mean([e for _, e in trace])),
        exec_time=elapsed,
        ticks=ticks,
        final_position=(float(state.object_position[0]), float(state.object_position[1])),
        pose_error_trace=trace,
        tactile_truncation=mode == TACTILE,
    )
    if pf is not None:
        result.filter_updates = pf.n_updates
        result.degenerate_updates = pf.n_degenerate
        result.max_weight_norm_error = pf.max_norm_error
        if pf.n_degenerate:
            result.success = False
            result.diagnostic = f"{pf.n_degenerate} degenerate weight updates"
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
            fh.write(json.dumps({"result": {k: v for k, v in result.row().items()}}) + "\n")
    return result


def _run_one(args):
    cfg, mode, seed, trace_path = args
    return run_trial(cfg, mode, seed, trace_path)


def _std(v) -> float:
    return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0


@dataclass
class ModeSummary:
    mode: str
    trials: int
    successes: int
    avg_pose_error: tuple[float, float]
    goal_dist: tuple[float, float]
    goal_dist_n: int
    exec_time: tuple[float, float]
    exec_time_n: int


@dataclass
class ExperimentSummary:
    modes: dict[str, ModeSummary]
    # proximity against tactile: (U, p) per metric, None when undefined
    u_avg_pose_error: tuple[float, float] | None = None
    u_goal_dist: tuple[float, float] | None = None

    def rows(self) -> list[dict]:
        out = []
        for m in self.modes.values():
            out.append({
                "mode": m.mode,
                "trials": m.trials,
                "successes": m.successes,
                "avg_pose_error_mean": _fmt(m.avg_pose_error[0]),
                "avg_pose_error_std": _fmt(m.avg_pose_error[1]),
                "goal_dist_n": m.goal_dist_n,
                "goal_dist_mean": _fmt(m.goal_dist[0]),
                "goal_dist_std": _fmt(m.goal_dist[1]),
                "exec_time_n": m.exec_time_n,
                "exec_time_mean": _fmt(m.exec_time[0]),
                "exec_time_std": _fmt(m.exec_time[1]),
            })
        if self.u_avg_pose_error is not None or self.u_goal_dist is not None:
            row = {"mode": f"{PROXIMITY}_vs_{TACTILE}"}
            if self.u_avg_pose_error is not None:
                row["u_avg_pose_error"] = _fmt(self.u_avg_pose_error[0])
                row["p_avg_pose_error"] = _fmt(self.u_avg_pose_error[1])
            if self.u_goal_dist is not None:
                row["u_goal_dist"] = _fmt(self.u_goal_dist[0])
                row["p_goal_dist"] = _fmt(self.u_goal_dist[1])
            out.append(row)
        return out


def _mean_std(v) -> tuple[float, float]:
    if not len(v):
        return float("nan"), float("nan")
    return float(np.mean(v)), _std(v)


def summarize(results: Sequence[TrialResult], modes: Iterable[str] | None = None) -> ExperimentSummary:
    """Per-mode means and spreads; goal distance and execution time use successful trials only."""
    modes = list(modes) if modes is not None else list(dict.fromkeys(r.mode for r in results))
    by_mode = {m: [r for r in results if r.mode == m] for m in modes}
    out = {}
    for m, rs in by_mode.items():
        ok = [r for r in rs if r.success]
        out[m] = ModeSummary(
            mode=m,
            trials=len(rs),
            successes=len(ok),
            avg_pose_error=_mean_std([r.avg_pose_error for r in rs]),
            goal_dist=_mean_std([r.final_goal_distance for r in ok]),
            goal_dist_n=len(ok),
            exec_time=_mean_std([r.exec_time for r in ok]),
            exec_time_n=len(ok),
        )
    summary = ExperimentSummary(out)
    if PROXIMITY in by_mode and TACTILE in by_mode:
        a, b = by_mode[PROXIMITY], by_mode[TACTILE]
        if a and b:
            t = mann_whitney_u([r.avg_pose_error for r in a], [r.avg_pose_error for r in b])
            summary.u_avg_pose_error = (t.statistic, t.pvalue)
        a = [r.final_goal_distance for r in a if r.success]
        b = [r.final_goal_distance for r in b if r.success]
        if a and b:
            t = mann_whitney_u(a, b)
            summary.u_goal_dist = (t.statistic, t.pvalue)
    return summary


def pose_error_trace_export(results: Sequence[TrialResult], path: str | Path | None = None) -> list[dict]:
    """Mean and spread of the pose error at each control tick, per mode.

    Trials that ended earlier simply drop out of the later ticks.
    """
    rows = []
    for mode in dict.fromkeys(r.mode for r in results):
        traces = [r.pose_error_trace for r in results if r.mode == mode]
        longest = max(len(t) for t in traces)
        for k in range(longest):
            vals = [t[k][1] for t in traces if len(t) > k]
            time = next(t[k][0] for t in traces if len(t) > k)
            rows.append({"mode": mode, "time": _fmt(time), "n": len(vals),
                         "mean": _fmt(float(np.mean(vals))), "std": _fmt(float(np.std(vals)))})
    if path is not None:
        _write_csv(path, ["mode", "time", "n", "mean", "std"], rows)
    return rows


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, restval="", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_outputs(results: Sequence[TrialResult], out_dir: str | Path, modes=None) -> ExperimentSummary:
    out = Path(out_dir)
    _write_csv(out / "trials.csv", TRIAL_COLUMNS, [r.row() for r in results])
    summary = summarize(results, modes)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary.rows())
    if results:
        pose_error_trace_export(results, out / "pose_error_trace.csv")
    return summary


def run_experiment(cfg: Config, modes: Sequence[str] = MODES, n_trials: int = 10, base_seed: int = 0,
                   out_dir: str | Path | None = None, workers: int | None = 1,
                   traces: bool = True) -> tuple[list[TrialResult], ExperimentSummary]:
    """Run ``n_trials`` seeded trials per mode and write the CSV and JSONL artifacts.

    Seeds are ``base_seed .. base_seed + n_trials - 1`` in every mode.  If the
    run is interrupted the finished trials are still written and
    :class:`IncompleteExperimentError` is raised.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}")
    out = None if out_dir is None else Path(out_dir)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for m in modes:
        for i in range(n_trials):
            seed = base_seed + i
            path = out / f"trace_{m}_{seed}.jsonl" if (out is not None and traces) else None
            jobs.append((cfg, m, seed, path))

    workers = workers or os.cpu_count() or 1
    results: list[TrialResult] = []
    try:
        if workers == 1:
            for job in jobs:
                results.append(_run_one(job))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for res in pool.map(_run_one, jobs):
                    results.append(res)
    except KeyboardInterrupt:
        if out is not None:
            write_outputs(results, out, modes)
        raise IncompleteExperimentError(
            f"interrupted after {len(results)} of {len(jobs)} trials", results) from None

    summary = write_outputs(results, out, modes) if out is not None else summarize(results, modes)
    return results, summary
