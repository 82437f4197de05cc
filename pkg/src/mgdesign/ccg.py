"""Decomposition solver: master with a growing subset of islanding events.

The loop seeds the master with the highest net-demand events, then
alternates master solves with independent per-event subproblem solves.
Infeasible subproblems force their event into the master; otherwise the
costliest event is added until the bound gap closes. Event subproblems
are pure LPs once the master decisions are fixed, so they parallelize
trivially.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .builder import (IslandingEvent, VariableCatalog, build_investment,
                      build_islanding_block, build_operations,
                      build_reliability_block, der_units, grid_context,
                      islanding_events)
from .linearize import MilpBlock
from .model import HOURS, KIND_STORAGE, ScenarioConfig
from .solver import (STATUS_INFEASIBLE, SolveResult, SolverParams, get_backend,
                     solve)


class CcgError(RuntimeError):
    pass


@dataclass
class CcgIteration:
    iteration: int
    added_event: int | None
    lb: float
    ub: float
    n_events: int
    master_time_s: float
    sub_time_s: float
    max_event_cost: float | None


@dataclass
class CcgState:
    members: list[int] = field(default_factory=list)
    lb: float = float("-inf")
    ub: float = float("inf")
    iterations: int = 0
    converged: bool = False
    eta: float = 0.0  # islanding objective carried by the final master
    log: list[CcgIteration] = field(default_factory=list)

    @property
    def gap(self) -> float:
        if self.ub == float("inf"):
            return float("inf")
        return (self.ub - self.lb) / max(1.0, abs(self.ub))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "lb", "ub", "added_event", "n_events",
                             "master_time_s", "sub_time_s", "max_event_cost"])
            for it in self.log:
                writer.writerow([it.iteration, it.lb, it.ub, it.added_event,
                                 it.n_events, round(it.master_time_s, 4),
                                 round(it.sub_time_s, 4), it.max_event_cost])

    def rows(self) -> list[dict]:
        return [vars(it).copy() for it in self.log]


@dataclass
class DesignSolution:
    """Investment decisions plus the grid-tied profiles they imply."""

    ders: dict[str, dict]
    candidate_lines: dict[str, bool]
    energy_profile: dict[str, list[list[float]]]
    pcc_kw: list[list[float]]
    costs: dict[str, float]
    objective: float
    islandable: bool | None = None

    @property
    def installed_lines(self) -> list[str]:
        return [lid for lid, on in self.candidate_lines.items() if on]

    def der_caps_at(self, bus: str) -> dict[str, float]:
        """Installed capacity per kind at one bus (kW; storage also kWh)."""
        out = {"DG": 0.0, "RG": 0.0, "Storage": 0.0, "Storage_kwh": 0.0}
        for info in self.ders.values():
            if info["bus"] == bus and info["installed"]:
                out[info["kind"]] += info["s_kw"]
                if info["kind"] == KIND_STORAGE:
                    out["Storage_kwh"] += info.get("e_kwh") or 0.0
        return out

    def to_dict(self) -> dict:
        return {
            "ders": self.ders,
            "candidate_lines": self.candidate_lines,
            "energy_profile": self.energy_profile,
            "pcc_kw": self.pcc_kw,
            "costs": self.costs,
            "objective": self.objective,
            "islandable": self.islandable,
        }

    @staticmethod
    def from_dict(payload: dict) -> "DesignSolution":
        return DesignSolution(
            ders={k: dict(v) for k, v in payload["ders"].items()},
            candidate_lines=dict(payload["candidate_lines"]),
            energy_profile={k: [list(day) for day in v]
                            for k, v in payload["energy_profile"].items()},
            pcc_kw=[list(day) for day in payload["pcc_kw"]],
            costs=dict(payload["costs"]),
            objective=payload["objective"],
            islandable=payload.get("islandable"),
        )


# ---------------------------------------------------------------------------
# event ranking


def event_net_energy(cfg: ScenarioConfig, ev: IslandingEvent) -> float:
    """Expected demand energy of the event window net of pre-existing RG."""
    day = cfg.days[ev.day]
    isl = cfg.islanding
    buses = cfg.network.demand_buses
    pv = {b.id: b.pv_kw for b in cfg.network.buses if b.pv_kw > 0}
    total = 0.0
    for j in range(isl.horizon_h):
        hour = (ev.hour + j) % HOURS
        net = sum(day.p_dmd(b, hour) for b in buses)
        net -= sum(kw * day.avail_pu(b, hour) for b, kw in pv.items())
        total += isl.survivor(j + 1) * net
    return total


def rank_events(cfg: ScenarioConfig) -> list[IslandingEvent]:
    """Events by descending expected net demand; earlier starts break ties."""
    events = islanding_events(cfg)
    return sorted(events, key=lambda ev: (-event_net_energy(cfg, ev),
                                          ev.day, ev.hour))


# ---------------------------------------------------------------------------
# master / subproblem plumbing


def build_master(cfg: ScenarioConfig, members: list[int],
                 include_reliability: bool, cat: VariableCatalog) -> MilpBlock:
    block = build_investment(cfg, cat)
    for d in range(len(cfg.days)):
        ops, _ = build_operations(cfg, grid_context(d), cat)
        block.merge(ops)
    if include_reliability:
        block.merge(build_reliability_block(cfg, cat))
    by_index = {ev.index: ev for ev in islanding_events(cfg)}
    for idx in members:
        block.merge(build_islanding_block(cfg, by_index[idx], cat))
    block.validate()
    return block


def master_link_values(cfg: ScenarioConfig, cat: VariableCatalog,
                       result: SolveResult) -> dict[str, float]:
    """Values of every master variable an event subproblem couples to."""
    values: dict[str, float] = {}
    for unit in der_units(cfg):
        if not unit.candidate:
            continue
        values[cat.name("cap", unit.uid)] = max(0.0, result.value(cat.name("cap", unit.uid)))
        values[cat.name("yinv", unit.uid)] = round(result.value(cat.name("yinv", unit.uid)))
        if unit.kind == KIND_STORAGE:
            values[cat.name("ecap", unit.uid)] = max(
                0.0, result.value(cat.name("ecap", unit.uid)))
    for line in cfg.network.candidate_lines:
        values[cat.name("yline", line.id)] = round(result.value(cat.name("yline", line.id)))
    for unit in der_units(cfg):
        if unit.kind != KIND_STORAGE:
            continue
        for d in range(len(cfg.days)):
            for h in range(HOURS):
                name = cat.name("e", unit.uid, d, h)
                values[name] = max(0.0, result.value(name))
    return values


def solve_event_subproblem(cfg: ScenarioConfig, ev: IslandingEvent,
                           link_values: dict[str, float],
                           params: SolverParams, backend=None) -> SolveResult:
    """Event LP at fixed master decisions; objective is the floored cost."""
    cat = VariableCatalog()
    block = build_islanding_block(cfg, ev, cat)
    bound = block.bind(link_values)
    bound.validate()
    return solve(bound, params, backend=backend)


def design_from_master(cfg: ScenarioConfig, cat: VariableCatalog,
                       result: SolveResult,
                       include_reliability: bool) -> DesignSolution:
    ders = {}
    energy = {}
    for unit in der_units(cfg):
        if unit.candidate:
            s_kw = max(0.0, result.value(cat.name("cap", unit.uid)))
            installed = result.value(cat.name("yinv", unit.uid)) > 0.5
            e_kwh = None
            if unit.kind == KIND_STORAGE:
                e_kwh = max(0.0, result.value(cat.name("ecap", unit.uid)))
                energy[unit.uid] = [
                    [max(0.0, result.value(cat.name("e", unit.uid, d, h)))
                     for h in range(HOURS)] for d in range(len(cfg.days))]
        else:
            s_kw, e_kwh, installed = float(unit.fixed_kw), None, True
        ders[unit.uid] = {"kind": unit.kind, "bus": unit.bus,
                          "installed": installed, "s_kw": s_kw, "e_kwh": e_kwh}
    lines = {line.id: result.value(cat.name("yline", line.id)) > 0.5
             for line in cfg.network.candidate_lines}
    pcc = [[result.value(cat.name("ppcc", d, h)) for h in range(HOURS)]
           for d in range(len(cfg.days))]
    costs = {
        "invest": result.value(cat.name("cinv")),
        "operations": sum(cfg.days[d].weight * result.value(cat.name("cop", d, h))
                          for d in range(len(cfg.days)) for h in range(HOURS)),
        "reliability": result.value(cat.name("crel")) if include_reliability else 0.0,
    }
    return DesignSolution(ders, lines, energy, pcc, costs,
                          objective=result.objective)


# ---------------------------------------------------------------------------
# the loop


def run(cfg: ScenarioConfig, include_reliability: bool = True,
        eps: float | None = None, n0: int | None = None,
        params: SolverParams | None = None, backend=None):
    """Iterate master and subproblems until the relative bound gap closes.

    Returns ``(DesignSolution, CcgState)``. The lower bound is the proven
    master bound (monotone by construction); the upper bound sums the
    master's non-islanding cost with every event's re-solved cost at the
    fixed master solution, which is a feasible-point value of the full
    objective whenever all events are feasible.
    """
    eps = cfg.params.ccg_eps if eps is None else eps
    n0 = cfg.params.ccg_n0 if n0 is None else n0
    if eps <= 0 or n0 < 1:
        raise CcgError("eps must be > 0 and n0 >= 1")
    params = params or SolverParams(gap=cfg.params.mip_gap,
                                    time_limit_s=cfg.params.time_limit_s,
                                    threads=cfg.params.threads,
                                    seed=cfg.params.seed)
    # the master must be proven tighter than the requested loop gap
    master_params = SolverParams(gap=min(params.gap, eps / 2.0),
                                 time_limit_s=params.time_limit_s,
                                 threads=params.threads, seed=params.seed)
    sub_params = SolverParams(gap=1e-9, time_limit_s=params.time_limit_s,
                              threads=1, seed=params.seed)
    backend = backend if backend is not None else get_backend()

    ranked = rank_events(cfg)
    all_events = {ev.index: ev for ev in ranked}
    rank_pos = {ev.index: pos for pos, ev in enumerate(ranked)}
    members = [ev.index for ev in ranked[:min(n0, len(ranked))]]
    state = CcgState(members=list(members))
    max_iters = len(ranked) + 2

    design = None
    last_master = None
    cat = None
    while state.iterations < max_iters:
        state.iterations += 1
        cat = VariableCatalog()
        master = build_master(cfg, members, include_reliability, cat)
        res = solve(master, master_params, backend=backend)
        if res.status == STATUS_INFEASIBLE:
            raise CcgError(
                "master infeasible: no design can serve islanding event(s) "
                f"{members[-1:]} within the capacity bounds")
        if not res.ok:
            raise CcgError(f"master solve failed with status {res.status}")
        last_master = res
        state.lb = max(state.lb, res.bound)

        link = master_link_values(cfg, cat, res)
        sub_time = 0.0
        results: dict[int, SolveResult] = {}
        if params.threads > 1:
            with ThreadPoolExecutor(max_workers=params.threads) as pool:
                futs = {idx: pool.submit(solve_event_subproblem, cfg,
                                         all_events[idx], link, sub_params,
                                         backend)
                        for idx in all_events}
                for idx in sorted(futs):
                    results[idx] = futs[idx].result()
        else:
            for idx in sorted(all_events):
                results[idx] = solve_event_subproblem(
                    cfg, all_events[idx], link, sub_params, backend)
        sub_time = sum(r.wall_time_s for r in results.values())

        infeasible = [idx for idx, r in results.items()
                      if r.status == STATUS_INFEASIBLE and idx not in members]
        member_set = set(members)
        added = None
        max_cost = None
        if infeasible:
            added = min(infeasible, key=lambda idx: rank_pos[idx])
        else:
            costs = {idx: max(0.0, r.objective) for idx, r in results.items()}
            max_cost = max(costs.values()) if costs else 0.0
            base_cost = _non_islanding_cost(cfg, cat, res, include_reliability)
            ub_candidate = base_cost + sum(costs.values())
            if ub_candidate < state.ub:
                state.ub = ub_candidate
                design = design_from_master(cfg, cat, res, include_reliability)
                design.costs["resilience"] = sum(costs.values())
                design.costs["total"] = ub_candidate
                design.islandable = True
            state.eta = sum(costs[idx] for idx in members)
            if state.gap <= eps:
                state.converged = True
            else:
                candidates = [idx for idx in costs if idx not in member_set]
                if candidates:
                    added = max(candidates,
                                key=lambda idx: (costs[idx], -rank_pos[idx]))
                else:
                    # every event already sits in the master; bounds are final
                    state.converged = state.gap <= eps
        state.log.append(CcgIteration(
            state.iterations, added, state.lb, state.ub, len(members),
            res.wall_time_s, sub_time, max_cost))
        if added is not None:
            members.append(added)
            state.members = list(members)
        else:
            break
    else:
        raise CcgError(f"iteration cap {max_iters} exceeded without convergence")

    if design is None:
        raise CcgError("no feasible design found: some event stayed infeasible")
    return design, state


def _non_islanding_cost(cfg, cat, result, include_reliability) -> float:
    total = result.value(cat.name("cinv"))
    for d in range(len(cfg.days)):
        w = cfg.days[d].weight
        for h in range(HOURS):
            total += w * result.value(cat.name("cop", d, h))
    if include_reliability:
        total += result.value(cat.name("crel"))
    return total


# ---------------------------------------------------------------------------
# fixed-design evaluation


def expected_unserved(cfg: ScenarioConfig, ev: IslandingEvent):
    """Cost and energy of serving nothing during one event (per occurrence).

    Weighs the cumulative demand energy of every possible event duration by
    its probability; used to price events a fixed design cannot ride
    through, with 100 % of demand unserved.
    """
    isl = cfg.islanding
    day = cfg.days[ev.day]
    rel = cfg.reliability
    cost = 0.0
    energy = 0.0
    for j in range(isl.horizon_h):
        surv = isl.survivor(j + 1)
        hour = (ev.hour + j) % HOURS
        for b in cfg.network.demand_buses:
            p = day.p_dmd(b, hour)
            energy += surv * p
            cost += surv * p * rel.cost_ns_of(b)
    return isl.p_start * cost, isl.p_start * energy


def invest_values(cfg: ScenarioConfig, cat: VariableCatalog,
                  design: DesignSolution) -> dict[str, float]:
    values = {}
    for unit in der_units(cfg):
        if not unit.candidate:
            continue
        info = design.ders[unit.uid]
        values[cat.name("cap", unit.uid)] = info["s_kw"] if info["installed"] else 0.0
        values[cat.name("yinv", unit.uid)] = 1.0 if info["installed"] else 0.0
        if unit.kind == KIND_STORAGE:
            values[cat.name("ecap", unit.uid)] = (info.get("e_kwh") or 0.0) \
                if info["installed"] else 0.0
    for line in cfg.network.candidate_lines:
        values[cat.name("yline", line.id)] = 1.0 if design.candidate_lines.get(
            line.id, False) else 0.0
    return values


@dataclass
class EvaluatedDesign:
    design: DesignSolution
    costs: dict[str, float]
    islandable: bool
    eens_islanding_kwh: float
    event_feasible: dict[int, bool]
    event_cost: dict[int, float]


def evaluate_fixed_design(cfg: ScenarioConfig, design: DesignSolution,
                          include_reliability: bool = True,
                          params: SolverParams | None = None,
                          backend=None) -> EvaluatedDesign:
    """Re-dispatch a frozen design and cost every islanding event.

    The design's grid-tied storage profile is part of the frozen first
    stage (it is what lets the design anticipate events), so it is pinned
    alongside the investments. Events the design can serve contribute
    their redispatch/recharge cost; events it cannot are charged the full
    energy-not-supplied penalty. Puts every design case on one common cost
    metric.
    """
    params = params or SolverParams(gap=min(cfg.params.mip_gap, 1e-4),
                                    time_limit_s=cfg.params.time_limit_s)
    backend = backend if backend is not None else get_backend()
    cat = VariableCatalog()
    block = build_investment(cfg, cat)
    for d in range(len(cfg.days)):
        ops, _ = build_operations(cfg, grid_context(d), cat)
        block.merge(ops)
    if include_reliability:
        block.merge(build_reliability_block(cfg, cat))
    fixed = invest_values(cfg, cat, design)
    for uid, profile in design.energy_profile.items():
        info = design.ders.get(uid)
        if not info or not info["installed"]:
            continue
        for d, day_vals in enumerate(profile):
            for h, v in enumerate(day_vals):
                fixed[cat.name("e", uid, d, h)] = max(0.0, v)
    res = solve(block.bind(fixed), params, backend=backend)
    if not res.ok:
        raise CcgError(f"design infeasible in grid-tied operation: {res.status}")

    merged = dict(fixed)
    merged.update(res.values)
    full = SolveResult(res.status, res.objective, merged, res.bound, res.wall_time_s)
    refreshed = design_from_master(cfg, cat, full, include_reliability)
    refreshed.ders = {uid: dict(info) for uid, info in design.ders.items()}
    refreshed.candidate_lines = dict(design.candidate_lines)

    link = master_link_values(cfg, cat, full)
    sub_params = SolverParams(gap=1e-9, time_limit_s=params.time_limit_s)
    event_ok: dict[int, bool] = {}
    event_cost: dict[int, float] = {}
    eens_isl = 0.0
    for ev in islanding_events(cfg):
        sub = solve_event_subproblem(cfg, ev, link, sub_params, backend)
        if sub.ok:
            event_ok[ev.index] = True
            # the subproblem objective already carries the day weight
            event_cost[ev.index] = max(0.0, sub.objective)
        else:
            event_ok[ev.index] = False
            cost, energy = expected_unserved(cfg, ev)
            event_cost[ev.index] = ev.weight * cost
            eens_isl += ev.weight * energy
    islandable = all(event_ok.values()) if event_ok else True

    costs = dict(refreshed.costs)
    costs["resilience"] = sum(event_cost.values())
    costs["total"] = (costs["invest"] + costs["operations"]
                      + costs["resilience"] + costs.get("reliability", 0.0))
    refreshed.costs = costs
    refreshed.islandable = islandable
    refreshed.objective = costs["total"]
    return EvaluatedDesign(refreshed, costs, islandable, eens_isl,
                           event_ok, event_cost)
