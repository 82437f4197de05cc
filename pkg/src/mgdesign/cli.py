"""Command-line front end.

Exit codes: 0 success, 2 scenario/input validation error, 3 solver or
decomposition failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import cases, io
from .ccg import CcgError
from .model import ScenarioError
from .solver import SolverError, SolverParams, get_backend

EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _load(scenario_path, gap, eps, n0, threads):
    cfg = io.load_scenario(scenario_path)
    algo = cfg.params
    import dataclasses
    cfg = dataclasses.replace(cfg, params=dataclasses.replace(
        algo,
        mip_gap=gap if gap is not None else algo.mip_gap,
        ccg_eps=eps if eps is not None else algo.ccg_eps,
        ccg_n0=n0 if n0 is not None else algo.ccg_n0,
        threads=threads if threads is not None else algo.threads))
    return cfg


def _params(cfg):
    return SolverParams(gap=cfg.params.mip_gap, time_limit_s=cfg.params.time_limit_s,
                        threads=cfg.params.threads, seed=cfg.params.seed)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def solver_options(fn):
    fn = click.option("--solver", default=None,
                      help="MILP backend (highs or fallback)")(fn)
    fn = click.option("--gap", type=float, default=None,
                      help="MILP relative optimality gap")(fn)
    fn = click.option("--eps", type=float, default=None,
                      help="decomposition bound-gap threshold")(fn)
    fn = click.option("--n0", type=int, default=None,
                      help="events seeded into the first master")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="parallel event subproblem solves")(fn)
    return fn


@click.group()
def main():
    """Microgrid retrofit design toolkit."""


@main.command("run")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--case", "case_id", required=True,
              type=click.Choice(cases.CASES))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@solver_options
def run_cmd(scenario_path, case_id, out_path, solver, gap, eps, n0, threads):
    """Design the feeder under one case and write the report JSON."""
    try:
        cfg = _load(scenario_path, gap, eps, n0, threads)
        backend = get_backend(solver)
    except (ScenarioError, SolverError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        report = cases.run_case(cfg, case_id, params=_params(cfg), backend=backend)
    except (CcgError, SolverError) as exc:
        _fail(EXIT_SOLVER, str(exc))
    report.save(out_path)
    log_path = Path(out_path).with_suffix(".ccg.csv")
    if report.ccg_log:
        import csv as _csv
        with open(log_path, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=list(report.ccg_log[0]))
            writer.writeheader()
            writer.writerows(report.ccg_log)
    click.echo(f"case={case_id} total={report.costs['total']:.2f} $/y "
               f"({report.normalized_cents_per_kwh:.3f} c/kWh) -> {out_path}")


def _parse_axes(spec: str):
    """Compact grid syntax: ``duration=6,12;rg=0.5,1.0;storage-cost=1.0,0.6``."""
    durs, rgs, scs = [None], [1.0], [1.0]
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        name, _, values = part.partition("=")
        vals = [v for v in values.split(",") if v.strip()]
        if name == "duration":
            durs = [int(v) for v in vals]
        elif name == "rg":
            rgs = [float(v) for v in vals]
        elif name in ("storage-cost", "storage_cost"):
            scs = [float(v) for v in vals]
        else:
            raise ValueError(f"unknown sweep axis {name!r}")
    return durs, rgs, scs


@main.command("sweep")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--axes", default=None,
              help="grid spec, e.g. 'duration=6,12;rg=0.5,1;storage-cost=1,0.6'")
@click.option("--durations", default="", help="comma list of horizons (h)")
@click.option("--rg-scales", default="1.0", help="comma list of RG scale factors")
@click.option("--storage-cost-scales", default="1.0",
              help="comma list of storage cost factors")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@solver_options
def sweep_cmd(scenario_path, axes, durations, rg_scales, storage_cost_scales,
              out_path, solver, gap, eps, n0, threads):
    """Full-case design over a sensitivity grid; writes a JSON table."""
    try:
        cfg = _load(scenario_path, gap, eps, n0, threads)
        backend = get_backend(solver)
        if axes:
            durs, rgs, scs = _parse_axes(axes)
        else:
            durs = [int(v) for v in durations.split(",") if v.strip()] or [None]
            rgs = [float(v) for v in rg_scales.split(",") if v.strip()] or [1.0]
            scs = [float(v) for v in storage_cost_scales.split(",")
                   if v.strip()] or [1.0]
    except (ScenarioError, SolverError, ValueError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    table = cases.sweep(cfg, durs, rgs, scs, params=_params(cfg), backend=backend)
    Path(out_path).write_text(json.dumps(table, indent=1, sort_keys=True))
    failed = [r for r in table["rows"] if r.get("status") != "ok"]
    click.echo(f"sweep: {len(table['rows'])} points, {len(failed)} failed "
               f"-> {out_path}")
    if failed and len(failed) == len(table["rows"]):
        sys.exit(EXIT_SOLVER)


@main.command("partition")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@solver_options
def partition_cmd(scenario_path, spec_path, out_path, solver, gap, eps, n0, threads):
    """Design each sub-microgrid of a partition spec independently."""
    try:
        cfg = _load(scenario_path, gap, eps, n0, threads)
        backend = get_backend(solver)
        spec = json.loads(Path(spec_path).read_text())
        parts = spec["partitions"]
    except (ScenarioError, SolverError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        result = cases.partition(cfg, parts, params=_params(cfg), backend=backend)
    except ScenarioError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (CcgError, SolverError) as exc:
        _fail(EXIT_SOLVER, str(exc))
    payload = {"aggregate": result["aggregate"],
               "per_mg": {name: rep.to_dict()
                          for name, rep in result["per_mg"].items()}}
    Path(out_path).write_text(json.dumps(payload, indent=1, sort_keys=True))
    click.echo(f"partition: {len(result['per_mg'])} microgrids -> {out_path}")


@main.command("mc-validate")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--design", "design_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--years", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def mc_validate_cmd(scenario_path, design_path, years, seed, out_path):
    """Check analytic indices against the Monte-Carlo oracle."""
    try:
        cfg = io.load_scenario(scenario_path)
        design = cases.load_design(design_path)
        result = cases.mc_validate(cfg, design, years, seed)
    except ScenarioError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    for row in result["rows"]:
        click.echo(f"{row['result']:4s} {row['bus']:>6s} {row['metric']:<14s} "
                   f"analytic={row['analytic']:.4f} mc={row['monte_carlo']:.4f} "
                   f"tol={row['tolerance']:.4f}")
    if out_path:
        Path(out_path).write_text(json.dumps(result, indent=1, sort_keys=True))
    if not result["pass"]:
        _fail(EXIT_SOLVER, "Monte-Carlo validation failed")
    click.echo(f"mc-validate: PASS ({years} simulated years)")


if __name__ == "__main__":
    main()
