"""Command line entry points.

`sandbox run/replay/serve` drive scripted sessions; the `dmp` group fits and
rolls out movement primitives on JSONL pose files (one pose per line:
t, x, y, z, qw, qx, qy, qz).
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import dmp as dmp_mod
from .errors import ReplayDivergence
from .scenarios import load_scenario, run_scenario, session_factory, write_metrics
from .session import persist, resume


@click.group()
def sandbox():
    """Scripted human-robot collaboration sessions in a simulated workspace."""


@sandbox.command()
@click.option("--scenario", required=True,
              help="Bundled scenario name (gift_bags, stop_motion) or JSON path.")
@click.option("--backend", type=click.Choice(["det", "llm"]), default=None,
              help="Override the scenario's planning backend.")
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--metrics-out", type=click.Path(), default=None)
@click.option("--log-out", type=click.Path(), default=None)
def run(scenario, backend, seed, metrics_out, log_out):
    """Run a scripted scenario headlessly and report its metrics."""
    config = load_scenario(scenario)
    if backend:
        config["backend"] = backend
    if seed is not None:
        config["seed"] = seed
    session = run_scenario(config, log_path=log_out,
                           session_id=config.get("name", "run"))
    report = (write_metrics(session, metrics_out) if metrics_out
              else None)
    if report is None:
        from .scenarios import metrics_report

        report = metrics_report(session)
    click.echo(json.dumps(report["metrics"], indent=2, sort_keys=True))
    click.echo(f"api version: {session.api.version}")


@sandbox.command()
@click.argument("log", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None,
              help="Replay with a different seed (divergence check).")
def replay(log, seed):
    """Replay an event log and verify it reproduces bit-for-bit."""
    try:
        session = resume(log, session_factory, seed=seed)
    except ReplayDivergence as e:
        raise click.ClickException(f"replay diverged: {e}")
    click.echo(f"replay OK: {len(session.records)} records, "
               f"api version {session.api.version}, mode {session.mode.name}")


@sandbox.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8123)
def serve(host, port):
    """Serve the operator gateway."""
    from .gateway import serve as serve_gateway

    serve_gateway(host=host, port=port)


@click.group()
def dmp():
    """Fit and roll out movement primitives on JSONL pose files."""


@dmp.command()
@click.argument("demo", type=click.Path(exists=True))
@click.option("--out", "params_out", type=click.Path(), required=True,
              help="Output file for the fitted parameters (JSON).")
@click.option("-j", "--basis-count", type=int, default=dmp_mod.DEFAULT_J)
def fit(demo, params_out, basis_count):
    """Fit DMP parameters from a demonstration pose file."""
    demonstration = dmp_mod.load_demonstration_jsonl(demo)
    params = dmp_mod.fit_dmp(demonstration, j=basis_count)
    Path(params_out).write_text(json.dumps(params.to_doc(), indent=2) + "\n")
    click.echo(f"fitted {basis_count} bases over "
               f"{len(demonstration.positions)} waypoints -> {params_out}")


def _parse_vec(text):
    return np.array([float(v) for v in text.split(",")])


@dmp.command()
@click.argument("params", type=click.Path(exists=True))
@click.option("--goal", default=None, help="x,y,z (defaults to the demo goal).")
@click.option("--start", default=None, help="x,y,z (defaults to the demo start).")
@click.option("--steps", type=int, default=30)
@click.option("--dt", type=float, default=0.1)
@click.option("--out", "traj_out", type=click.Path(), required=True)
def rollout(params, goal, start, steps, dt, traj_out):
    """Roll out fitted parameters to a trajectory pose file."""
    p = dmp_mod.DmpParams.from_doc(json.loads(Path(params).read_text()))
    cfg = dmp_mod.RolloutConfig(
        goal=_parse_vec(goal) if goal else p.goal,
        start=_parse_vec(start) if start else None,
        step_count=steps, dt=dt,
    )
    traj = dmp_mod.rollout(p, cfg)
    dmp_mod.save_trajectory_jsonl(traj_out, traj)
    click.echo(f"{steps} steps, {cfg.duration:.3f} s -> {traj_out}")


@dmp.command()
@click.argument("params", type=click.Path(exists=True))
@click.option("--goal", default=None, help="x,y,z (defaults to the demo goal).")
@click.option("--start", default=None, help="x,y,z (defaults to the demo start).")
@click.option("--steps", type=int, default=30, help="Original step count.")
@click.option("--dt", type=float, default=0.1, help="Original step period.")
@click.option("--new-steps", type=int, default=None)
@click.option("--new-duration", type=float, default=None)
@click.option("--out", "traj_out", type=click.Path(), required=True)
def retime(params, goal, start, steps, dt, new_steps, new_duration, traj_out):
    """Re-time a rollout (same spatial path, new step count / duration)."""
    if new_steps is None and new_duration is None:
        raise click.UsageError("give --new-steps and/or --new-duration")
    p = dmp_mod.DmpParams.from_doc(json.loads(Path(params).read_text()))
    cfg = dmp_mod.RolloutConfig(
        goal=_parse_vec(goal) if goal else p.goal,
        start=_parse_vec(start) if start else None,
        step_count=steps, dt=dt,
    )
    cfg = dmp_mod.retime(cfg, new_step_count=new_steps, new_duration=new_duration)
    traj = dmp_mod.rollout(p, cfg)
    dmp_mod.save_trajectory_jsonl(traj_out, traj)
    click.echo(f"{cfg.step_count} steps, {cfg.duration:.3f} s -> {traj_out}")


sandbox.add_command(dmp)
