"""Experiment harness: design cases, sensitivity sweeps, feeder partitioning.

The four design cases incrementally enable model levels:

* ``base``        -- investment + grid-tied operations
* ``reliability`` -- adds the internal-fault cost term
* ``resilience``  -- adds islanding events (decomposition solve)
* ``full``        -- everything

Cases without islanding get their islanding impact priced ex post, so all
four land on one comparable cost metric.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import ccg, reliability
from .builder import assemble_extensive
from .model import (RepresentativeDay, ScenarioConfig, ScenarioError,
                    build_islanding_distribution, validate_scenario)
from .solver import SolverParams, get_backend, solve

#: annual surcharge for islanding-capable switchgear/controls, $ per MWh of
#: served demand; applied to the cases that buy islanding capability
ISLANDING_ENABLEMENT_USD_PER_MWH = 2.0

CASES = ("base", "reliability", "resilience", "full")


@dataclass(frozen=True)
class CaseSpec:
    case_id: str
    include_reliability: bool
    include_islanding: bool

    @staticmethod
    def of(case_id: str) -> "CaseSpec":
        table = {
            "base": CaseSpec("base", False, False),
            "reliability": CaseSpec("reliability", True, False),
            "resilience": CaseSpec("resilience", False, True),
            "full": CaseSpec("full", True, True),
        }
        try:
            return table[case_id]
        except KeyError:
            raise ScenarioError(f"unknown case {case_id!r}; pick one of {CASES}")


@dataclass
class DesignReport:
    case_id: str
    design: ccg.DesignSolution
    costs: dict[str, float]
    normalized_cents_per_kwh: float
    peak_pcc_kw: float
    reliability_report: reliability.ReliabilityReport
    eens_islanding_kwh: float
    ccg_log: list[dict] = field(default_factory=list)
    ccg_bounds: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "case": self.case_id,
            "installed": {
                "ders": [{"uid": uid, **info}
                         for uid, info in sorted(self.design.ders.items())],
                "candidate_lines": self.design.candidate_lines,
            },
            "costs": self.costs,
            "normalized_cents_per_kwh": self.normalized_cents_per_kwh,
            "peak_pcc_kw": self.peak_pcc_kw,
            "islandable": self.design.islandable,
            "reliability": self.reliability_report.to_dict(),
            "eens_islanding_kwh": self.eens_islanding_kwh,
            "ccg": {"log": self.ccg_log, **self.ccg_bounds},
            "design": self.design.to_dict(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))


def load_design(path) -> ccg.DesignSolution:
    raw = json.loads(Path(path).read_text())
    if "design" not in raw:
        raise ScenarioError(f"{path}: not a design report (no 'design' payload)")
    return ccg.DesignSolution.from_dict(raw["design"])


def _solver_params(cfg: ScenarioConfig, override: SolverParams | None) -> SolverParams:
    if override is not None:
        return override
    return SolverParams(gap=cfg.params.mip_gap, time_limit_s=cfg.params.time_limit_s,
                        threads=cfg.params.threads, seed=cfg.params.seed)


def run_case(cfg: ScenarioConfig, case_id: str,
             params: SolverParams | None = None, backend=None) -> DesignReport:
    """Design the network under one case and report on the common metric."""
    case = CaseSpec.of(case_id)
    params = _solver_params(cfg, params)
    backend = backend if backend is not None else get_backend()

    log, bounds = [], {}
    if case.include_islanding:
        design, state = ccg.run(cfg, include_reliability=case.include_reliability,
                                params=params, backend=backend)
        log = state.rows()
        bounds = {"lb": state.lb, "ub": state.ub, "iterations": state.iterations,
                  "converged": state.converged}
    else:
        block, cat = assemble_extensive(
            cfg, include_reliability=case.include_reliability,
            include_islanding=False)
        res = solve(block, params, backend=backend)
        if not res.ok:
            raise ccg.CcgError(f"{case_id} design solve failed: {res.status}")
        design = ccg.design_from_master(cfg, cat, res, case.include_reliability)

    evaluation = ccg.evaluate_fixed_design(cfg, design, include_reliability=True,
                                           backend=backend)
    design = evaluation.design
    costs = dict(evaluation.costs)
    annual_mwh = cfg.annual_demand_kwh / 1000.0
    if case.include_islanding:
        costs["islanding_enablement"] = ISLANDING_ENABLEMENT_USD_PER_MWH * annual_mwh
    else:
        costs["islanding_enablement"] = 0.0
    costs["total"] = (costs["invest"] + costs["operations"] + costs["resilience"]
                      + costs["reliability"] + costs["islanding_enablement"])
    rel_report = reliability.analytic_indices(cfg, design)
    peak_pcc = max((abs(v) for day in design.pcc_kw for v in day), default=0.0)
    cents = 100.0 * costs["total"] / max(cfg.annual_demand_kwh, 1e-9)
    return DesignReport(case_id, design, costs, cents, peak_pcc, rel_report,
                        evaluation.eens_islanding_kwh, log, bounds)


# ---------------------------------------------------------------------------
# sensitivity sweep


def _with_islanding_horizon(cfg: ScenarioConfig, horizon_h: int) -> ScenarioConfig:
    isl = cfg.islanding
    if isl.gev is None:
        raise ScenarioError("duration sweep needs GEV parameters on the scenario")
    pm = isl.point_mass_h if isl.point_mass_h and isl.point_mass_h <= horizon_h else None
    return dataclasses.replace(cfg, islanding=build_islanding_distribution(
        isl.gev, horizon_h, isl.p_start, pm))


def _with_rg_scale(cfg: ScenarioConfig, scale: float) -> ScenarioConfig:
    buses = tuple(dataclasses.replace(b, pv_kw=b.pv_kw * scale)
                  for b in cfg.network.buses)
    return dataclasses.replace(cfg, network=dataclasses.replace(cfg.network,
                                                                buses=buses))


def _with_storage_cost_scale(cfg: ScenarioConfig, scale: float) -> ScenarioConfig:
    ders = tuple(dataclasses.replace(s, fixed_cost_usd=s.fixed_cost_usd * scale,
                                     var_cost_usd=s.var_cost_usd * scale)
                 if s.kind == "Storage" else s for s in cfg.ders)
    return dataclasses.replace(cfg, ders=ders)


def sweep_point(cfg: ScenarioConfig, duration_h: int | None, rg_scale: float,
                storage_cost_scale: float) -> ScenarioConfig:
    out = cfg
    if duration_h is not None:
        out = _with_islanding_horizon(out, duration_h)
    if rg_scale != 1.0:
        out = _with_rg_scale(out, rg_scale)
    if storage_cost_scale != 1.0:
        out = _with_storage_cost_scale(out, storage_cost_scale)
    return validate_scenario(out)


def sweep(cfg: ScenarioConfig, durations=(None,), rg_scales=(1.0,),
          storage_cost_scales=(1.0,), params: SolverParams | None = None,
          backend=None) -> dict:
    """Full-case design at every grid point; per-point failures are recorded
    and the sweep continues."""
    rows = []
    for dur in durations:
        for rg in rg_scales:
            for sc in storage_cost_scales:
                row = {"duration_h": dur, "rg_scale": rg,
                       "storage_cost_scale": sc}
                try:
                    point = sweep_point(cfg, dur, rg, sc)
                    report = run_case(point, "full", params=params, backend=backend)
                    caps = _capacity_summary(report.design)
                    row.update(status="ok", **caps,
                               total_usd=report.costs["total"],
                               invest_usd=report.costs["invest"])
                except Exception as exc:  # per-point failure must not kill the sweep
                    row.update(status="failed", error=str(exc))
                rows.append(row)
    return {"rows": rows, "trends": _trends(rows)}


def _capacity_summary(design: ccg.DesignSolution) -> dict:
    dg = sum(i["s_kw"] for i in design.ders.values()
             if i["kind"] == "DG" and i["installed"])
    st_kw = sum(i["s_kw"] for i in design.ders.values()
                if i["kind"] == "Storage" and i["installed"])
    st_kwh = sum(i["e_kwh"] or 0.0 for i in design.ders.values()
                 if i["kind"] == "Storage" and i["installed"])
    return {"dg_kw": dg, "storage_kw": st_kw, "storage_kwh": st_kwh}


def _trends(rows) -> dict:
    """Sign of the installed-capacity change along each swept axis.

    Moves below 0.5 kW(h) or 0.2 % count as noise, not a trend.
    """
    ok = [r for r in rows if r.get("status") == "ok"]
    trends = {}
    for axis in ("duration_h", "rg_scale", "storage_cost_scale"):
        values = sorted({r[axis] for r in ok if r[axis] is not None})
        if len(values) < 2:
            continue
        for metric in ("dg_kw", "storage_kwh"):
            series = []
            for v in values:
                pts = [r[metric] for r in ok if r[axis] == v]
                if pts:
                    series.append(sum(pts) / len(pts))
            tol = max(0.5, 0.002 * max(map(abs, series), default=0.0))
            deltas = [b - a for a, b in zip(series, series[1:])]
            up = any(d > tol for d in deltas)
            down = any(d < -tol for d in deltas)
            label = {(False, False): "flat", (True, False): "increasing",
                     (False, True): "decreasing", (True, True): "mixed"}[(up, down)]
            trends[f"{metric}_vs_{axis}"] = label
    return trends


# ---------------------------------------------------------------------------
# multi-microgrid partitioning


def partition_scenario(cfg: ScenarioConfig, name: str, buses: set[str],
                       pcc: str) -> ScenarioConfig:
    """Restrict the scenario to one partition with its own coupling point."""
    if pcc not in buses:
        raise ScenarioError(f"partition {name}: PCC {pcc!r} not inside the partition")
    keep = set(buses)
    net = cfg.network
    new_buses = tuple(dataclasses.replace(b, pcc=(b.id == pcc))
                      for b in net.buses if b.id in keep)
    new_lines = tuple(l for l in net.lines
                      if l.from_bus in keep and l.to_bus in keep)
    ders = tuple(dataclasses.replace(
        s, candidate_buses=tuple(b for b in s.candidate_buses if b in keep))
        for s in cfg.ders)
    days = tuple(RepresentativeDay(
        weight=d.weight,
        demand_kw={b: v for b, v in d.demand_kw.items() if b in keep},
        rg_avail_pu={b: v for b, v in d.rg_avail_pu.items() if b in keep},
        pf={b: v for b, v in d.pf.items() if b in keep}) for d in cfg.days)
    rel = dataclasses.replace(
        cfg.reliability,
        cost_ns={b: v for b, v in cfg.reliability.cost_ns.items() if b in keep})
    sub = dataclasses.replace(cfg, network=dataclasses.replace(
        net, buses=new_buses, lines=new_lines, pcc=pcc), ders=ders, days=days,
        reliability=rel)
    try:
        return validate_scenario(sub)
    except ScenarioError as exc:
        raise ScenarioError([f"partition {name}: {v}" for v in exc.violations])


def partition(cfg: ScenarioConfig, parts: list[dict],
              params: SolverParams | None = None, backend=None) -> dict:
    """Design every partition independently and stack the results.

    ``parts`` rows need ``name``, ``buses`` and ``pcc``; partitions must be
    disjoint and cover every bus. Each partition's coupling bus inherits
    the upstream tariff.
    """
    all_buses = set(cfg.network.bus_ids)
    seen: set[str] = set()
    for p in parts:
        got = set(p["buses"])
        overlap = seen & got
        if overlap:
            raise ScenarioError(f"partitions overlap on buses {sorted(overlap)}")
        seen |= got
    if seen != all_buses:
        raise ScenarioError(
            f"partitions do not cover buses {sorted(all_buses - seen)}")

    per_mg = {}
    for p in parts:
        sub = partition_scenario(cfg, p["name"], set(p["buses"]), p["pcc"])
        per_mg[p["name"]] = run_case(sub, "full", params=params, backend=backend)

    agg_costs: dict[str, float] = {}
    for rep in per_mg.values():
        for k, v in rep.costs.items():
            agg_costs[k] = agg_costs.get(k, 0.0) + v
    n_buses = sum(len(rep.reliability_report.per_bus) for rep in per_mg.values())
    agg_idx = {"eens_kwh": 0.0, "saifi": 0.0, "saidi_h": 0.0}
    for rep in per_mg.values():
        sys = rep.reliability_report.system
        n = len(rep.reliability_report.per_bus)
        agg_idx["eens_kwh"] += sys["eens_kwh"]
        agg_idx["saifi"] += sys["saifi"] * n
        agg_idx["saidi_h"] += sys["saidi_h"] * n
    if n_buses:
        agg_idx["saifi"] /= n_buses
        agg_idx["saidi_h"] /= n_buses
    return {"per_mg": per_mg, "aggregate": {"costs": agg_costs, **agg_idx}}


# ---------------------------------------------------------------------------
# Monte-Carlo validation


def mc_validate(cfg: ScenarioConfig, design: ccg.DesignSolution, years: int,
                seed: int = 0) -> dict:
    """Analytic indices vs simulation, pass/fail per the 3-sigma criterion.

    A metric passes when the analytic value lies within the larger of the
    simulation's 3-sigma band and 2 % of itself.
    """
    analytic = reliability.analytic_indices(cfg, design)
    mc = reliability.monte_carlo_oracle(cfg, design, years, seed)
    rows = []
    all_pass = True
    for bus, a in analytic.per_bus.items():
        m = mc.report.per_bus[bus]
        for metric, av, mv in (
                ("u_rel_h", a.u_rel_h, m.u_rel_h),
                ("eens_int_kwh", a.eens_int_kwh, m.eens_int_kwh),
                ("eens_isl_kwh", a.eens_isl_kwh, m.eens_isl_kwh),
                ("eens_kwh", a.eens_kwh, m.eens_kwh)):
            band_key = {"u_rel_h": "u_rel", "eens_int_kwh": "eens_int",
                        "eens_isl_kwh": "eens_isl", "eens_kwh": "eens"}[metric]
            tol = max(mc.band(band_key, bus), 0.02 * abs(av))
            ok = abs(av - mv) <= tol or (av == 0.0 and mv == 0.0)
            all_pass &= ok
            rows.append({"bus": bus, "metric": metric, "analytic": av,
                         "monte_carlo": mv, "tolerance": tol,
                         "result": "PASS" if ok else "FAIL"})
    return {"rows": rows, "pass": bool(all_pass), "years": years, "seed": seed}
