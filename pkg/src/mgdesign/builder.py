"""Builders translating a scenario into composable MILP blocks.

Four builders mirror the decision levels of the design problem:
investment (DER/line siting and sizing), grid-tied operations over the
representative days, one islanding block per event, and the
internal-fault reliability block. ``assemble_extensive`` merges them into
the full model, which doubles as the ground-truth oracle for the
decomposition solver on small instances.

All power variables are in kW/kvar, energies in kWh, squared voltages in
per-unit; money is $ per year in the objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .linearize import (BINARY, Lin, MilpBlock, abs_value, bilinear_binary,
                        polygon_soc, pwl_quadratic)
from .model import (HOURS, HOURS_PER_YEAR, KIND_DG, KIND_RG, KIND_STORAGE,
                    DerSpec, ScenarioConfig, annuity_factor)

#: constraint families that any fully-featured assembled model must emit;
#: the test suite audits coverage against this list.
REQUIRED_TAGS = (
    "invest_cost", "invest_activation", "invest_binary",
    "der_apparent_cap", "der_active_cap", "der_reactive_cap", "der_power_factor",
    "rg_availability",
    "storage_apparent_cap", "storage_sizing_ratio", "storage_soc_bounds",
    "storage_energy_balance", "storage_net_power", "storage_cyclic",
    "storage_cycle_cap",
    "balance_p", "balance_q", "voltage_bounds", "voltage_drop", "line_rating",
    "pcc_loss", "op_cost", "der_cost", "curtail_cost", "pcc_cost",
    "island_pcc_zero", "island_storage_init", "island_recharge_cost",
    "island_event_cost",
    "path_flow", "path_binary", "outage_duration",
    "selfsupply_apparent", "selfsupply_energy", "selfsupply_power",
    "eens", "reliability_cost",
    "polygon", "pwl", "abs_value", "bilinear",
)


class BuildError(ValueError):
    """Scenario cannot be translated into a well-formed model."""


class VariableCatalog:
    """Registry mapping structured symbol keys to flat variable names."""

    def __init__(self):
        self.handles: dict[tuple, str] = {}

    def reg(self, symbol: str, *parts) -> str:
        key = (symbol,) + tuple(parts)
        name = self.handles.get(key)
        if name is None:
            name = f"{symbol}[{','.join(str(p) for p in parts)}]" if parts else symbol
            self.handles[key] = name
        return name

    def name(self, symbol: str, *parts) -> str:
        try:
            return self.handles[(symbol,) + tuple(parts)]
        except KeyError:
            raise KeyError(f"no handle for {symbol}{parts}") from None

    def select(self, symbol: str) -> dict[tuple, str]:
        return {key[1:]: name for key, name in self.handles.items()
                if key[0] == symbol}


@dataclass(frozen=True)
class DerUnit:
    """One installable or pre-existing DER at a specific bus."""

    uid: str
    kind: str
    bus: str
    spec: DerSpec
    fixed_kw: float | None = None  # set for pre-existing units

    @property
    def candidate(self) -> bool:
        return self.fixed_kw is None


# operating envelope for pre-existing PV whose capacity is a parameter
_EXISTING_RG_SPEC = DerSpec(kind=KIND_RG, pf_min=0.9)


def der_units(cfg: ScenarioConfig) -> list[DerUnit]:
    units = []
    rg_spec = cfg.der_spec(KIND_RG) or _EXISTING_RG_SPEC
    for bus in cfg.network.buses:
        if bus.pv_kw > 0:
            units.append(DerUnit(f"pv@{bus.id}", KIND_RG, bus.id, rg_spec, bus.pv_kw))
    for spec in cfg.ders:
        for bus in spec.candidate_buses:
            units.append(DerUnit(f"{spec.kind.lower()}@{bus}", spec.kind, bus, spec))
    return units


def big_m_power(cfg: ScenarioConfig) -> float:
    """Capacity activation constant: a multiple of the feeder peak demand."""
    peak = cfg.peak_apparent_demand_kva()
    return cfg.params.big_m_factor * max(peak, 1.0)


@dataclass(frozen=True)
class IslandingEvent:
    index: int
    day: int
    hour: int
    weight: float  # days represented by the event's start day


def islanding_events(cfg: ScenarioConfig) -> list[IslandingEvent]:
    """One event per representative hour, starting at that hour."""
    out = []
    for d, day in enumerate(cfg.days):
        for h in range(HOURS):
            out.append(IslandingEvent(d * HOURS + h, d, h, day.weight))
    return out


@dataclass(frozen=True)
class OpContext:
    prefix: str          # "" for grid-tied, "ev<i>." for islanding copies
    day: int
    steps: tuple[int, ...]  # absolute hours of day, in temporal order
    islanded: bool
    event: IslandingEvent | None = None

    def key(self, j: int):
        # grid-tied variables are keyed (day, hour); event copies by step
        return (self.day, self.steps[j]) if not self.islanded else (j,)


def grid_context(day: int) -> OpContext:
    return OpContext("", day, tuple(range(HOURS)), False)


#: longest supported event window; copies wrap cyclically inside their
#: representative day, which stops being meaningful past a week
MAX_EVENT_HORIZON_H = 7 * HOURS


def event_context(cfg: ScenarioConfig, ev: IslandingEvent) -> OpContext:
    horizon = cfg.islanding.horizon_h
    if horizon > MAX_EVENT_HORIZON_H:
        raise BuildError(f"event horizon {horizon} h exceeds the cyclic wrap "
                         f"limit of {MAX_EVENT_HORIZON_H} h")
    steps = tuple((ev.hour + j) % HOURS for j in range(horizon))
    return OpContext(f"ev{ev.index}.", ev.day, steps, True, ev)


# ---------------------------------------------------------------------------
# investment


def _cap_bounds(cfg, unit):
    m_s = big_m_power(cfg)
    if unit.kind == KIND_STORAGE:
        return m_s, m_s / unit.spec.f_c_per_h
    return m_s, None


def declare_investment_vars(cfg: ScenarioConfig, cat: VariableCatalog,
                            block: MilpBlock) -> None:
    """Declare sizing/installation variables with their canonical bounds.

    Used by every builder that references investment decisions so merged
    declarations coincide exactly.
    """
    for unit in der_units(cfg):
        if not unit.candidate:
            continue
        m_s, m_e = _cap_bounds(cfg, unit)
        block.var(cat.reg("cap", unit.uid), 0.0, m_s)
        if unit.kind == KIND_STORAGE:
            block.var(cat.reg("ecap", unit.uid), 0.0, m_e)
        block.var(cat.reg("yinv", unit.uid), kind=BINARY)
    for line in cfg.network.candidate_lines:
        block.var(cat.reg("yline", line.id), kind=BINARY)


def build_investment(cfg: ScenarioConfig, cat: VariableCatalog) -> MilpBlock:
    """Annualized investment cost, activation logic, and binaries."""
    block = MilpBlock()
    declare_investment_vars(cfg, cat, block)
    rate = cfg.tariff.interest_rate
    cost = Lin()
    for unit in der_units(cfg):
        if not unit.candidate:
            continue
        spec = unit.spec
        a = annuity_factor(rate, spec.lifetime_y)
        y = cat.name("yinv", unit.uid)
        if unit.kind == KIND_STORAGE:
            size = cat.name("ecap", unit.uid)
            m_s, m_e = _cap_bounds(cfg, unit)
            block.row({cat.name("cap", unit.uid): 1.0, size: -spec.f_c_per_h},
                      "==", 0.0, ("storage_sizing_ratio",))
            block.row({size: 1.0, y: -m_e}, "<=", 0.0, ("invest_activation",))
        else:
            size = cat.name("cap", unit.uid)
            m_s, _ = _cap_bounds(cfg, unit)
            block.row({size: 1.0, y: -m_s}, "<=", 0.0, ("invest_activation",))
        cost.add(size, spec.var_cost_usd / a)
        cost.add(y, spec.fixed_cost_usd / a)
    for line in cfg.network.candidate_lines:
        a = annuity_factor(rate, line.lifetime_y)
        cost.add(cat.name("yline", line.id), line.cost_usd / a)
    cinv = block.var(cat.reg("cinv"), lb=0.0)
    cost.add(cinv, -1.0)
    block.row_expr(cost, "==", 0.0, ("invest_cost",))
    block.obj(cinv, 1.0)
    block.tag("invest_binary")
    return block


# ---------------------------------------------------------------------------
# operations (shared by grid-tied and islanded contexts)


def _cap_term(cat, unit):
    """Capacity reference: a variable term for candidates, a constant otherwise."""
    if unit.candidate:
        return (cat.name("cap", unit.uid), 1.0)
    return float(unit.fixed_kw)


def _der_rows(block, cat, cfg, ctx, unit, j, hour, day):
    """Generator rows for one DG/RG unit at one step; returns its cost expr."""
    spec = unit.spec
    pre = ctx.prefix
    key = ctx.key(j)
    p = block.var(cat.reg(pre + "p", unit.uid, *key), lb=0.0)
    q = block.var(cat.reg(pre + "q", unit.uid, *key))
    cap = _cap_term(cat, unit)
    block.merge(polygon_soc(p, q, cap, cfg.params.n_polygon,
                            ("der_apparent_cap", "polygon")))
    block.row_expr(Lin().add(p, 1.0).add_term(cap, -spec.f_p_max), "<=", 0.0,
                   ("der_active_cap",))
    block.row_expr(Lin().add(q, 1.0).add_term(cap, -spec.f_q_max), "<=", 0.0,
                   ("der_reactive_cap",))
    block.row_expr(Lin().add(q, -1.0).add_term(cap, -spec.f_q_max), "<=", 0.0,
                   ("der_reactive_cap",))
    if spec.pf_min > 0:
        tan_phi = math.tan(math.acos(min(spec.pf_min, 1.0)))
        block.row({q: 1.0, p: -tan_phi}, "<=", 0.0, ("der_power_factor",))
        block.row({q: -1.0, p: -tan_phi}, "<=", 0.0, ("der_power_factor",))
    if unit.kind == KIND_RG:
        avail_pu = day.avail_pu(unit.bus, hour)
        block.row_expr(Lin().add(p, 1.0).add_term(cap, -avail_pu), "<=", 0.0,
                       ("rg_availability",))
    cost = Lin()
    if spec.cost_p_usd_kwh > 0:
        cost.add(p, spec.cost_p_usd_kwh)
    if spec.cost_q_usd_kvarh > 0:
        qa, frag = abs_value(q, name=cat.reg(pre + "qabs", unit.uid, *key),
                             tags=("der_cost", "abs_value"))
        block.merge(frag)
        cost.add(qa, spec.cost_q_usd_kvarh)
    return cost


def _storage_rows(block, cat, cfg, ctx, unit, j, hour):
    """Storage rows for one step; dynamics chain along the context steps."""
    spec = unit.spec
    pre = ctx.prefix
    key = ctx.key(j)
    cap = _cap_term(cat, unit)  # inverter kW rating
    ecap = (cat.name("ecap", unit.uid), 1.0)
    pch = block.var(cat.reg(pre + "pch", unit.uid, *key), lb=0.0)
    pd = block.var(cat.reg(pre + "pd", unit.uid, *key), lb=0.0)
    e = block.var(cat.reg(pre + "e", unit.uid, *key), lb=0.0)
    pstr = block.var(cat.reg(pre + "pstr", unit.uid, *key))
    qstr = block.var(cat.reg(pre + "qstr", unit.uid, *key))
    block.row({pstr: 1.0, pd: -1.0, pch: 1.0}, "==", 0.0, ("storage_net_power",))
    block.merge(polygon_soc(pstr, qstr, cap, cfg.params.n_polygon,
                            ("storage_apparent_cap", "polygon")))
    # each direction individually respects the inverter rating
    for v in (pch, pd):
        block.row_expr(Lin().add(v, 1.0).add_term(cap, -1.0), "<=", 0.0,
                       ("storage_apparent_cap",))
    block.row_expr(Lin().add(e, 1.0).add_term(ecap, -1.0), "<=", 0.0,
                   ("storage_soc_bounds",))
    # islanded copies cannot buy back self-discharge, so the usable-depth
    # floor decays with it; otherwise an idle battery would be infeasible
    floor = 1.0 - spec.dod_max
    if ctx.islanded:
        floor *= spec.eta_self ** (j + 1)
    block.row_expr(Lin().add(e, -1.0).add_term(ecap, floor), "<=", 0.0,
                   ("storage_soc_bounds",))
    if j > 0:
        prev = cat.name(pre + "e", unit.uid, *ctx.key(j - 1))
        block.row({e: 1.0, prev: -spec.eta_self, pch: -spec.eta_ch,
                   pd: 1.0 / spec.eta_d}, "==", 0.0, ("storage_energy_balance",))
    cost = Lin()
    if spec.cost_p_usd_kwh > 0:
        cost.add(pd, spec.cost_p_usd_kwh)
    if spec.cost_q_usd_kvarh > 0:
        qa, frag = abs_value(qstr, name=cat.reg(pre + "qsabs", unit.uid, *key),
                             tags=("der_cost", "abs_value"))
        block.merge(frag)
        cost.add(qa, spec.cost_q_usd_kvarh)
    return cost


def _storage_boundary_rows(block, cat, cfg, ctx, unit):
    """Close the daily cycle (grid-tied) or hook into the master profile (event)."""
    spec = unit.spec
    pre = ctx.prefix
    last = len(ctx.steps) - 1
    e0 = cat.name(pre + "e", unit.uid, *ctx.key(0))
    pch0 = cat.name(pre + "pch", unit.uid, *ctx.key(0))
    pd0 = cat.name(pre + "pd", unit.uid, *ctx.key(0))
    if not ctx.islanded:
        e_last = cat.name(pre + "e", unit.uid, *ctx.key(last))
        # first-hour balance wraps onto the last hour, and the stored energy
        # returns to its day-start value: the day is a closed cycle
        block.row({e0: 1.0, e_last: -spec.eta_self, pch0: -spec.eta_ch,
                   pd0: 1.0 / spec.eta_d}, "==", 0.0,
                  ("storage_energy_balance", "storage_cyclic"))
        block.row({e0: 1.0, e_last: -1.0}, "==", 0.0, ("storage_cyclic",))
    else:
        ev = ctx.event
        prev_hour = (ev.hour - 1) % HOURS
        e_master = cat.reg("e", unit.uid, ev.day, prev_hour)
        block.var(e_master, lb=0.0)
        block.row({e0: 1.0, e_master: -spec.eta_self, pch0: -spec.eta_ch,
                   pd0: 1.0 / spec.eta_d}, "==", 0.0,
                  ("storage_energy_balance", "island_storage_init"))
    # cycle-count cap, prorated per started day of the window
    days_spanned = max(1, math.ceil(len(ctx.steps) / HOURS))
    throughput = Lin()
    for j in range(len(ctx.steps)):
        throughput.add(cat.name(pre + "pch", unit.uid, *ctx.key(j)), 1.0)
        throughput.add(cat.name(pre + "pd", unit.uid, *ctx.key(j)), 1.0)
    throughput.add_term((cat.name("ecap", unit.uid), 1.0),
                        -2.0 * spec.n_cyc_max * days_spanned)
    block.row_expr(throughput, "<=", 0.0, ("storage_cycle_cap",))


def build_operations(cfg: ScenarioConfig, ctx: OpContext, cat: VariableCatalog):
    """Physical operating rows for one context (a day or an event window).

    Returns ``(block, step_der_cost)`` where ``step_der_cost[j]`` is the
    DER dispatch cost expression of step ``j`` (used by islanding blocks
    to price redispatch; grid-tied contexts fold it into the hourly
    operating-cost variable directly).
    """
    block = MilpBlock()
    declare_investment_vars(cfg, cat, block)
    net = cfg.network
    day = cfg.days[ctx.day]
    units = der_units(cfg)
    pre = ctx.prefix
    r_scale = 2.0 / net.s_base_kva
    v_span = (max(b.v_max for b in net.buses) - min(b.v_min for b in net.buses))
    step_der_cost: list[Lin] = []

    for j in range(len(ctx.steps)):
        hour = ctx.steps[j]
        key = ctx.key(j)
        der_cost = Lin()
        curtail_cost = Lin()
        inj_p: dict[str, Lin] = {b.id: Lin() for b in net.buses}
        inj_q: dict[str, Lin] = {b.id: Lin() for b in net.buses}

        for unit in units:
            if unit.kind == KIND_STORAGE:
                der_cost_u = _storage_rows(block, cat, cfg, ctx, unit, j, hour)
                inj_p[unit.bus].add(cat.name(pre + "pstr", unit.uid, *key), 1.0)
                inj_q[unit.bus].add(cat.name(pre + "qstr", unit.uid, *key), 1.0)
            else:
                der_cost_u = _der_rows(block, cat, cfg, ctx, unit, j, hour, day)
                inj_p[unit.bus].add(cat.name(pre + "p", unit.uid, *key), 1.0)
                inj_q[unit.bus].add(cat.name(pre + "q", unit.uid, *key), 1.0)
                if unit.kind == KIND_RG and not ctx.islanded \
                        and cfg.tariff.curtail_usd_kwh > 0:
                    avail = Lin().add_term(_cap_term(cat, unit),
                                           day.avail_pu(unit.bus, hour))
                    avail.add(cat.name(pre + "p", unit.uid, *key), -1.0)
                    for name, coef in avail.terms.items():
                        curtail_cost.add(name, cfg.tariff.curtail_usd_kwh * coef)
                    curtail_cost.addc(cfg.tariff.curtail_usd_kwh * avail.const)
            for name, coef in der_cost_u.terms.items():
                der_cost.add(name, coef)

        # line flows, ratings, loss terms, voltage drops
        loss = Lin()
        for line in net.lines:
            fp = block.var(cat.reg(pre + "fp", line.id, *key),
                           -line.rating_kva, line.rating_kva)
            fq = block.var(cat.reg(pre + "fq", line.id, *key),
                           -line.rating_kva, line.rating_kva)
            if line.candidate:
                gate = (cat.name("yline", line.id), line.rating_kva)
            else:
                gate = line.rating_kva
            block.merge(polygon_soc(fp, fq, gate, cfg.params.n_polygon,
                                    ("line_rating", "polygon")))
            fp2, frag = pwl_quadratic(fp, line.rating_kva, cfg.params.pwl_segments,
                                      name=cat.reg(pre + "fp2", line.id, *key),
                                      tags=("pcc_loss", "pwl"))
            block.merge(frag)
            fq2, frag = pwl_quadratic(fq, line.rating_kva, cfg.params.pwl_segments,
                                      name=cat.reg(pre + "fq2", line.id, *key),
                                      tags=("pcc_loss", "pwl"))
            block.merge(frag)
            loss.add(fp2, line.r_pu / net.s_base_kva)
            loss.add(fq2, line.r_pu / net.s_base_kva)
            inj_p[line.from_bus].add(fp, -1.0)
            inj_p[line.to_bus].add(fp, 1.0)
            inj_q[line.from_bus].add(fq, -1.0)
            inj_q[line.to_bus].add(fq, 1.0)

        for b in net.buses:
            if b.id == net.pcc:
                block.var(cat.reg(pre + "v", b.id, *key), 1.0, 1.0)
            else:
                block.var(cat.reg(pre + "v", b.id, *key), b.v_min, b.v_max)
        block.tag("voltage_bounds")
        for line in net.lines:
            vf = cat.name(pre + "v", line.from_bus, *key)
            vt = cat.name(pre + "v", line.to_bus, *key)
            drop = {vf: 1.0, vt: -1.0,
                    cat.name(pre + "fp", line.id, *key): -r_scale * line.r_pu,
                    cat.name(pre + "fq", line.id, *key): -r_scale * line.x_eff}
            if line.candidate:
                y = cat.name("yline", line.id)
                up = dict(drop)
                up[y] = v_span
                block.row(up, "<=", v_span, ("voltage_drop",))
                dn = {k: -v for k, v in drop.items()}
                dn[y] = v_span
                block.row(dn, "<=", v_span, ("voltage_drop",))
            else:
                block.row(drop, "==", 0.0, ("voltage_drop",))

        # PCC coupling: lossless import plus the quadratic loss surrogate
        pdf = block.var(cat.reg(pre + "pdf", *key))
        qdf = block.var(cat.reg(pre + "qdf", *key))
        ppcc = block.var(cat.reg(pre + "ppcc", *key))
        inj_p[net.pcc].add(pdf, 1.0)
        inj_q[net.pcc].add(qdf, 1.0)
        loss_row = Lin().add(ppcc, 1.0).add(pdf, -1.0)
        for name, coef in loss.terms.items():
            loss_row.add(name, -coef)
        block.row_expr(loss_row, "==", 0.0, ("pcc_loss",))

        for b in net.buses:
            block.row_expr(inj_p[b.id], "==", day.p_dmd(b.id, hour), ("balance_p",))
            block.row_expr(inj_q[b.id], "==", day.q_dmd(b.id, hour), ("balance_q",))

        if ctx.islanded:
            block.row({ppcc: 1.0}, "==", 0.0, ("island_pcc_zero",))
            block.row({qdf: 1.0}, "==", 0.0, ("island_pcc_zero",))
            step_der_cost.append(der_cost)
        else:
            pabs, frag = abs_value(ppcc, name=cat.reg(pre + "pabs", *key),
                                   tags=("pcc_cost", "abs_value"))
            block.merge(frag)
            qabs, frag = abs_value(qdf, name=cat.reg(pre + "qdfabs", *key),
                                   tags=("pcc_cost", "abs_value"))
            block.merge(frag)
            c_im = cfg.tariff.import_usd_kwh[hour]
            c_ex = cfg.tariff.export_usd_kwh[hour]
            pcc_cost = (Lin()
                        .add(ppcc, c_ex + (c_im - c_ex) / 2.0)
                        .add(pabs, (c_im - c_ex) / 2.0)
                        .add(qabs, cfg.tariff.reactive_usd_kvarh))
            cop = block.var(cat.reg("cop", ctx.day, hour))
            total = Lin().add(cop, -1.0)
            for part in (pcc_cost, der_cost, curtail_cost):
                for name, coef in part.terms.items():
                    total.add(name, coef)
                total.addc(part.const)
            block.row_expr(total, "==", 0.0,
                           ("op_cost", "der_cost", "curtail_cost", "pcc_cost"))
            block.obj(cop, day.weight)
            step_der_cost.append(der_cost)

    for unit in units:
        if unit.kind == KIND_STORAGE:
            _storage_boundary_rows(block, cat, cfg, ctx, unit)
    return block, step_der_cost


# ---------------------------------------------------------------------------
# islanding events


def build_islanding_block(cfg: ScenarioConfig, ev: IslandingEvent,
                          cat: VariableCatalog) -> MilpBlock:
    """Operating copy for one islanding event plus its expected-cost rows.

    The event spans the full design horizon starting at the event hour,
    wrapping cyclically inside its representative day. Storage starts from
    the grid-tied profile; for every possible ending step the storage
    deficit against the grid-tied plan is priced at the reconnection-hour
    import tariff. The event objective is the occurrence-probability
    weighted expectation over ending times, floored at zero so islanding
    credits never subsidize the rest of the design.
    """
    isl = cfg.islanding
    ctx = event_context(cfg, ev)
    block, step_cost = build_operations(cfg, ctx, cat)
    pre = ctx.prefix
    storages = [u for u in der_units(cfg) if u.kind == KIND_STORAGE]

    expected = Lin()
    for k in range(1, isl.horizon_h + 1):
        p_end = isl.duration_probs[k - 1]
        end_hour = ctx.steps[k - 1]
        reconnect = (end_hour + 1) % HOURS
        price = cfg.tariff.import_usd_kwh[reconnect]
        for unit in storages:
            e_master = cat.reg("e", unit.uid, ev.day, end_hour)
            block.var(e_master, lb=0.0)
            e_event = cat.name(pre + "e", unit.uid, k - 1)
            rech = block.var(cat.reg(pre + "erech", unit.uid, k))
            block.row({rech: 1.0, e_master: -price, e_event: price}, "==", 0.0,
                      ("island_recharge_cost",))
            expected.add(rech, p_end)
    for j in range(isl.horizon_h):
        surv = isl.survivor(j + 1)
        for name, coef in step_cost[j].terms.items():
            expected.add(name, coef * surv)
        expected.addc(step_cost[j].const * surv)

    cres = block.var(cat.reg("cres", ev.index))
    row = Lin().add(cres, -1.0)
    for name, coef in expected.terms.items():
        row.add(name, coef * isl.p_start)
    row.addc(expected.const * isl.p_start)
    block.row_expr(row, "==", 0.0, ("island_event_cost",))
    sres = block.var(cat.reg("sres", ev.index), lb=0.0)
    block.row({sres: 1.0, cres: -ev.weight}, ">=", 0.0, ("island_event_cost",))
    block.obj(sres, 1.0)
    return block


# ---------------------------------------------------------------------------
# reliability


def _self_supply_denominator(spec: DerSpec, tau_max: float) -> float:
    """Discharge-window factor: energy spread over the longest repair."""
    steps = max(1, math.ceil(tau_max))
    return sum(spec.eta_self ** (1 - k) for k in range(1, steps + 1))


def build_reliability_block(cfg: ScenarioConfig, cat: VariableCatalog) -> MilpBlock:
    """Expected outage duration, net-demand floors, and the cost of EENS."""
    block = MilpBlock()
    declare_investment_vars(cfg, cat, block)
    net = cfg.network
    rel = cfg.reliability
    units = der_units(cfg)
    tau_max = rel.tau_max(net)
    crel_expr = Lin()

    reachable = set()
    adj: dict[str, list] = {b.id: [] for b in net.buses}
    for line in net.lines:
        adj[line.from_bus].append(line.to_bus)
        adj[line.to_bus].append(line.from_bus)
    stack = [net.pcc]
    while stack:
        b = stack.pop()
        if b in reachable:
            continue
        reachable.add(b)
        stack.extend(adj[b])

    for dmd in net.demand_buses:
        if dmd not in reachable:
            raise BuildError(f"demand bus {dmd} unreachable from the PCC "
                             "even with all candidate lines")
        # unit path flow from the PCC to the demand bus over installed lines
        for line in net.lines:
            block.var(cat.reg("ypath", line.id, dmd), kind=BINARY)
            block.var(cat.reg("ybpath", line.id, dmd), kind=BINARY)
            u = block.var(cat.reg("upath", line.id, dmd), 0.0, 1.0)
            yp = cat.name("ypath", line.id, dmd)
            yb = cat.name("ybpath", line.id, dmd)
            block.row({u: 1.0, yp: -1.0, yb: -1.0}, "==", 0.0, ("path_flow",))
            if line.candidate:
                block.row({yp: 1.0, yb: 1.0,
                           cat.name("yline", line.id): -1.0}, "<=", 0.0,
                          ("path_flow",))
            else:
                block.row({yp: 1.0, yb: 1.0}, "<=", 1.0, ("path_flow",))
        block.tag("path_binary")
        for b in net.buses:
            balance = Lin()
            for line in net.lines:
                sign = 0.0
                if line.from_bus == b.id:
                    sign = 1.0
                elif line.to_bus == b.id:
                    sign = -1.0
                if sign:
                    balance.add(cat.name("ypath", line.id, dmd), sign)
                    balance.add(cat.name("ybpath", line.id, dmd), -sign)
            rhs = 1.0 if b.id == net.pcc else (-1.0 if b.id == dmd else 0.0)
            if b.id == dmd == net.pcc:
                rhs = 0.0
            block.row_expr(balance, "==", rhs, ("path_flow",))

        urel = block.var(cat.reg("urel", dmd), lb=0.0)
        dur = Lin().add(urel, -1.0)
        dur.addc(rel.equipment_rate_y * rel.equipment_repair_h)
        for line in net.lines:
            lam_tau = rel.line_rate(line) * rel.line_repair(line)
            dur.add(cat.name("upath", line.id, dmd), lam_tau)
        block.row_expr(dur, "==", 0.0, ("outage_duration",))

        # net demand after local self-supply, floored hour by hour
        local = [u for u in units if u.bus == dmd]
        mean_demand = 0.0
        mean_expr = Lin()
        for d, day in enumerate(cfg.days):
            for h in range(HOURS):
                p_dmd = day.p_dmd(dmd, h)
                pnet = block.var(cat.reg("pnet", dmd, d, h), 0.0, p_dmd)
                block.tag("selfsupply_nonneg")
                pf = day.pf_of(dmd, h)
                apparent = Lin().add(pnet, 1.0)
                active_e = Lin().add(pnet, 1.0)
                active_s = Lin().add(pnet, 1.0)
                for u in local:
                    cap = _cap_term(cat, u)
                    apparent.add_term(cap, pf)
                    if u.kind == KIND_RG:
                        avail = day.avail_pu(u.bus, h)
                        active_e.add_term(cap, avail)
                        active_s.add_term(cap, avail)
                    elif u.kind == KIND_DG:
                        active_e.add_term(cap, u.spec.f_p_max)
                        active_s.add_term(cap, u.spec.f_p_max)
                    else:
                        denom = _self_supply_denominator(u.spec, tau_max)
                        e_name = cat.reg("e", u.uid, d, h)
                        block.var(e_name, lb=0.0)
                        active_e.add(e_name, u.spec.eta_d / denom)
                        active_s.add_term(cap, 1.0)
                block.row_expr(apparent, ">=", p_dmd, ("selfsupply_apparent",))
                block.row_expr(active_e, ">=", p_dmd, ("selfsupply_energy",))
                block.row_expr(active_s, ">=", p_dmd, ("selfsupply_power",))
                mean_expr.add(pnet, day.weight / HOURS_PER_YEAR)
                mean_demand += day.weight * p_dmd / HOURS_PER_YEAR

        dmean = block.var(cat.reg("dmean", dmd), 0.0, max(mean_demand, 0.0))
        mean_expr.add(dmean, -1.0)
        block.row_expr(mean_expr, "==", 0.0, ("eens",))

        eens = block.var(cat.reg("eens", dmd), lb=0.0)
        acc = Lin().add(eens, -1.0)
        acc.add(dmean, rel.equipment_rate_y * rel.equipment_repair_h)
        for line in net.lines:
            lam_tau = rel.line_rate(line) * rel.line_repair(line)
            if lam_tau == 0.0 or mean_demand == 0.0:
                continue
            z, frag = bilinear_binary(cat.name("upath", line.id, dmd),
                                      dmean, mean_demand,
                                      name=cat.reg("zpath", line.id, dmd),
                                      tags=("eens", "bilinear"))
            block.merge(frag)
            acc.add(z, lam_tau)
        block.row_expr(acc, "==", 0.0, ("eens",))
        crel_expr.add(eens, rel.cost_ns_of(dmd))

    crel = block.var(cat.reg("crel"), lb=0.0)
    crel_expr.add(crel, -1.0)
    block.row_expr(crel_expr, "==", 0.0, ("reliability_cost",))
    block.obj(crel, 1.0)
    return block


# ---------------------------------------------------------------------------
# assembly


def assemble_extensive(cfg: ScenarioConfig, include_reliability: bool = True,
                       include_islanding: bool = True,
                       cat: VariableCatalog | None = None):
    """Full design model: investment, every day, every event, reliability.

    Serves as the direct-solve oracle for the decomposition method; a
    variable-count guard refuses instances that would clearly not fit.
    """
    cat = cat or VariableCatalog()
    block = build_investment(cfg, cat)
    for d in range(len(cfg.days)):
        ops, _ = build_operations(cfg, grid_context(d), cat)
        block.merge(ops)
    if include_reliability:
        block.merge(build_reliability_block(cfg, cat))
    if include_islanding:
        for ev in islanding_events(cfg):
            block.merge(build_islanding_block(cfg, ev, cat))
    cap = cfg.params.max_extensive_vars
    if len(block.variables) > cap:
        raise BuildError(
            f"extensive form has {len(block.variables)} variables, above the "
            f"configured cap of {cap}; solve via the decomposition instead")
    block.validate()
    return block, cat
