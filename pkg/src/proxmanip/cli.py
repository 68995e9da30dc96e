"""Command line entry point: ``proxmanip run-trial | run-experiment | raycast-debug``."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import load_config
from .errors import ConfigError
from .harness import MODES, IncompleteExperimentError, run_experiment, run_trial, summarize, write_outputs
from .hand import sensor_rays
from .sensors import expected_measurements

EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3


def _floats(text: str, n: int, name: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"{name} must be {n} comma separated numbers") from None
    if len(vals) != n:
        raise click.BadParameter(f"{name} must have {n} values, got {len(vals)}")
    return np.array(vals)


def _config(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Simulated proximity-sensing in-hand manipulation experiments."""


@main.command("run-trial")
@click.option("--mode", type=click.Choice(MODES), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Directory for trials.csv, summary.csv and the JSONL trace.")
def run_trial_cmd(mode, seed, config_path, out_dir):
    """Run one seeded trial."""
    cfg = _config(config_path)
    trace = None
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        trace = Path(out_dir) / f"trace_{mode}_{seed}.jsonl"
    try:
        res = run_trial(cfg, mode, seed, trace)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if out_dir is not None:
        write_outputs([res], out_dir, [mode])
    click.echo(json.dumps(res.row()))


@main.command("run-experiment")
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--modes", default="all", show_default=True,
              help="'all' or a comma separated subset of fiducial,proximity,tactile.")
@click.option("--base-seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--workers", type=int, default=None, help="Worker processes (default: all cores).")
def run_experiment_cmd(trials, modes, base_seed, config_path, out_dir, workers):
    """Run seeded trials for each sensing mode and write the metrics."""
    cfg = _config(config_path)
    if modes == "all":
        mode_list = list(MODES)
    else:
        mode_list = [m.strip() for m in modes.split(",") if m.strip()]
        bad = [m for m in mode_list if m not in MODES]
        if bad or not mode_list:
            raise click.BadParameter(f"unknown modes {bad}", param_hint="--modes")
    if trials < 1:
        raise click.BadParameter("must be >= 1", param_hint="--trials")
    try:
        _, summary = run_experiment(cfg, mode_list, trials, base_seed, out_dir, workers)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except IncompleteExperimentError as exc:
        click.echo(f"incomplete: {exc}", err=True)
        sys.exit(EXIT_INCOMPLETE)
    for row in summary.rows():
        click.echo(", ".join(f"{k}={v}" for k, v in row.items() if v != ""))


@main.command("raycast-debug")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--joints", required=True, help="Six joint angles in radians, comma separated.")
@click.option("--object", "obj", required=True, help="Cylinder centre x,y in mm.")
def raycast_debug_cmd(config_path, joints, obj):
    """Print the eight noiseless beam readings for a hand pose and cylinder position."""
    cfg = _config(config_path)
    q = _floats(joints, 6, "--joints")
    o = _floats(obj, 2, "--object")
    z = expected_measurements(q, o, cfg.hand, cfg.object.radius)
    origins, dirs = sensor_rays(q, cfg.hand)
    for j in range(len(z)):
        finger = "left" if j < 4 else "right"
        click.echo(f"{finger}{j % 4 + 1} origin=({origins[j, 0]:.3f},{origins[j, 1]:.3f}) "
                   f"dir=({dirs[j, 0]:.4f},{dirs[j, 1]:.4f}) z={z[j]:.3f}")


if __name__ == "__main__":
    main()
