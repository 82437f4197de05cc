"""Ex-post reliability/resilience indices and their Monte-Carlo oracle.

The analytic side evaluates the same outage-duration and net-demand
machinery the optimizer embeds (minimum failure-weight supply path per
demand bus, local self-supply floors, expected energy not supplied). The
sequential Monte-Carlo simulator replays faults and islanding events
against a frozen design and provides confidence bands to validate the
analytic model.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .ccg import DesignSolution
from .model import HOURS, HOURS_PER_YEAR, KIND_DG, KIND_RG, ScenarioConfig
from .builder import der_units, _self_supply_denominator


class ReliabilityError(ValueError):
    pass


@dataclass
class BusIndices:
    u_rel_h: float = 0.0        # expected internal outage duration, h/y
    saifi_int: float = 0.0
    saidi_int: float = 0.0
    eens_int_kwh: float = 0.0
    saifi_isl: float = 0.0
    saidi_isl: float = 0.0
    eens_isl_kwh: float = 0.0

    @property
    def saifi(self) -> float:
        return self.saifi_int + self.saifi_isl

    @property
    def saidi(self) -> float:
        return self.saidi_int + self.saidi_isl

    @property
    def eens_kwh(self) -> float:
        return self.eens_int_kwh + self.eens_isl_kwh

    def to_dict(self) -> dict:
        return {"u_rel_h": self.u_rel_h,
                "saifi": self.saifi, "saifi_int": self.saifi_int,
                "saifi_isl": self.saifi_isl,
                "saidi": self.saidi, "saidi_int": self.saidi_int,
                "saidi_isl": self.saidi_isl,
                "eens_kwh": self.eens_kwh, "eens_int_kwh": self.eens_int_kwh,
                "eens_isl_kwh": self.eens_isl_kwh}


@dataclass
class ReliabilityReport:
    per_bus: dict[str, BusIndices]
    c_rel_usd: float = 0.0

    @property
    def system(self) -> dict[str, float]:
        """Customer-weighted aggregates (one customer per demand bus)."""
        buses = list(self.per_bus.values())
        n = max(1, len(buses))
        agg = {
            "saifi": sum(b.saifi for b in buses) / n,
            "saifi_int": sum(b.saifi_int for b in buses) / n,
            "saifi_isl": sum(b.saifi_isl for b in buses) / n,
            "saidi_h": sum(b.saidi for b in buses) / n,
            "saidi_int_h": sum(b.saidi_int for b in buses) / n,
            "saidi_isl_h": sum(b.saidi_isl for b in buses) / n,
            "eens_kwh": sum(b.eens_kwh for b in buses),
            "eens_int_kwh": sum(b.eens_int_kwh for b in buses),
            "eens_isl_kwh": sum(b.eens_isl_kwh for b in buses),
        }
        return agg

    def to_dict(self) -> dict:
        return {"per_bus": {b: ix.to_dict() for b, ix in self.per_bus.items()},
                "system": self.system, "c_rel_usd": self.c_rel_usd}

    def to_csv(self, path) -> None:
        """Per-bus table with the internal/islanding split, ready to stack."""
        import csv

        fields = ["bus", "u_rel_h", "saifi", "saifi_int", "saifi_isl",
                  "saidi", "saidi_int", "saidi_isl",
                  "eens_kwh", "eens_int_kwh", "eens_isl_kwh"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for bus, ix in self.per_bus.items():
                writer.writerow({"bus": bus, **ix.to_dict()})


# ---------------------------------------------------------------------------
# shared plumbing


def installed_lines(cfg: ScenarioConfig, design: DesignSolution):
    lines = list(cfg.network.existing_lines)
    lines += [l for l in cfg.network.candidate_lines
              if design.candidate_lines.get(l.id, False)]
    return lines


def supply_path(cfg: ScenarioConfig, design: DesignSolution,
                dmd: str) -> list[str]:
    """Line ids of the installed path from the PCC minimizing failure weight.

    Mirrors the optimizer's path choice: the path with the smallest sum of
    failure rate times repair duration.
    """
    rel = cfg.reliability
    lines = installed_lines(cfg, design)
    adj: dict[str, list[tuple[str, object]]] = {b.id: [] for b in cfg.network.buses}
    for line in lines:
        adj[line.from_bus].append((line.to_bus, line))
        adj[line.to_bus].append((line.from_bus, line))
    start = cfg.network.pcc
    dist = {start: 0.0}
    prev: dict[str, tuple[str, object]] = {}
    heap = [(0.0, start)]
    while heap:
        d, b = heapq.heappop(heap)
        if d > dist.get(b, math.inf):
            continue
        if b == dmd:
            break
        for nb, line in sorted(adj[b], key=lambda t: t[0]):
            w = rel.line_rate(line) * rel.line_repair(line)
            nd = d + w
            if nd < dist.get(nb, math.inf) - 1e-15:
                dist[nb] = nd
                prev[nb] = (b, line)
                heapq.heappush(heap, (nd, nb))
    if dmd != start and dmd not in prev:
        raise ReliabilityError(f"demand bus {dmd} disconnected in this design")
    path = []
    b = dmd
    while b != start:
        b, line = prev[b]
        path.append(line.id)
    return list(reversed(path))


def net_demand_profile(cfg: ScenarioConfig, design: DesignSolution,
                       dmd: str) -> np.ndarray:
    """Hourly net demand after local self-supply, shape (days, 24)."""
    rel = cfg.reliability
    tau_max = rel.tau_max(cfg.network)
    units = [u for u in der_units(cfg) if u.bus == dmd]
    out = np.zeros((len(cfg.days), HOURS))
    for d, day in enumerate(cfg.days):
        for h in range(HOURS):
            p = day.p_dmd(dmd, h)
            pf = day.pf_of(dmd, h)
            cap_all = 0.0
            avail = 0.0
            dg_active = 0.0
            str_power = 0.0
            str_energy_rate = 0.0
            for u in units:
                info = design.ders.get(u.uid)
                if info is None or not info["installed"]:
                    continue
                s = info["s_kw"]
                cap_all += s
                if u.kind == KIND_RG:
                    avail += s * day.avail_pu(dmd, h)
                elif u.kind == KIND_DG:
                    dg_active += u.spec.f_p_max * s
                else:
                    str_power += s
                    profile = design.energy_profile.get(u.uid)
                    e = profile[d][h] if profile else 0.0
                    denom = _self_supply_denominator(u.spec, tau_max)
                    str_energy_rate += e * u.spec.eta_d / denom
            floors = (p - pf * cap_all,
                      p - avail - dg_active - str_energy_rate,
                      p - avail - dg_active - str_power)
            out[d, h] = max(0.0, *floors)
    return out


def _window_sum(profile_day: np.ndarray, h0: int, tau: float) -> float:
    full = int(math.floor(tau))
    total = sum(profile_day[(h0 + j) % HOURS] for j in range(full))
    frac = tau - full
    if frac > 0:
        total += frac * profile_day[(h0 + full) % HOURS]
    return float(total)


# ---------------------------------------------------------------------------
# analytic evaluation


def analytic_indices(cfg: ScenarioConfig, design: DesignSolution) -> ReliabilityReport:
    """Closed-form indices for a frozen design.

    Internal-fault terms follow the series logic along each bus's chosen
    supply path; designs that cannot ride through islanding additionally
    collect the full islanding event rate and truncated expected duration.
    """
    rel = cfg.reliability
    isl = cfg.islanding
    line_by_id = {l.id: l for l in cfg.network.lines}
    islandable = bool(design.islandable)
    isl_rate = isl.events_per_year
    isl_dur = isl.expected_duration_h
    per_bus: dict[str, BusIndices] = {}
    c_rel = 0.0
    for dmd in cfg.network.demand_buses:
        path = supply_path(cfg, design, dmd)
        lam = rel.equipment_rate_y
        u = rel.equipment_rate_y * rel.equipment_repair_h
        for lid in path:
            line = line_by_id[lid]
            lam += rel.line_rate(line)
            u += rel.line_rate(line) * rel.line_repair(line)
        pnet = net_demand_profile(cfg, design, dmd)
        weights = np.array([day.weight for day in cfg.days])
        mean_net = float((weights[:, None] * pnet).sum() / HOURS_PER_YEAR)
        ix = BusIndices(u_rel_h=u, saifi_int=lam, saidi_int=u,
                        eens_int_kwh=u * mean_net)
        if not islandable:
            ix.saifi_isl = isl_rate
            ix.saidi_isl = isl_rate * isl_dur
            eens = 0.0
            for d, day in enumerate(cfg.days):
                for h in range(HOURS):
                    for j in range(isl.horizon_h):
                        eens += (day.weight * isl.p_start * isl.survivor(j + 1)
                                 * day.p_dmd(dmd, (h + j) % HOURS))
            ix.eens_isl_kwh = eens
        per_bus[dmd] = ix
        c_rel += rel.cost_ns_of(dmd) * ix.eens_int_kwh
    return ReliabilityReport(per_bus, c_rel)


# ---------------------------------------------------------------------------
# Monte-Carlo oracle


@dataclass
class McResult:
    report: ReliabilityReport
    half_width: dict[str, dict[str, float]]  # metric -> bus -> 3-sigma band
    years: int
    seed: int

    def band(self, metric: str, bus: str) -> float:
        return self.half_width.get(metric, {}).get(bus, 0.0)


def monte_carlo_oracle(cfg: ScenarioConfig, design: DesignSolution,
                       years: int, seed: int = 0,
                       batches: int = 20) -> McResult:
    """Sequential simulation of faults and islanding over many years.

    Fault arrivals form one merged Poisson process (overlaps dropped: the
    rare-event regime the analytic series model assumes). A fault on a
    line interrupts exactly the buses whose designated supply path uses
    it; interrupted buses fall back to the local self-supply floors.
    Islanding events interrupt everyone unless the design rides through.
    Confidence half-widths are 3 sigma of batch means.
    """
    if years < 1:
        raise ReliabilityError("years must be >= 1")
    rng = np.random.default_rng(seed)
    rel = cfg.reliability
    isl = cfg.islanding
    buses = cfg.network.demand_buses
    bus_idx = {b: i for i, b in enumerate(buses)}
    nb = len(buses)
    line_by_id = {l.id: l for l in cfg.network.lines}

    paths = {b: supply_path(cfg, design, b) for b in buses}
    pnet = {b: net_demand_profile(cfg, design, b) for b in buses}
    demand = {b: np.array([[cfg.days[d].p_dmd(b, h) for h in range(HOURS)]
                           for d in range(len(cfg.days))]) for b in buses}
    day_probs = np.array([day.weight for day in cfg.days]) / sum(
        day.weight for day in cfg.days)

    # components: （rate, repair, affected bus indices)
    comps: list[tuple[float, float, list[int]]] = []
    for b in buses:
        if rel.equipment_rate_y > 0:
            comps.append((rel.equipment_rate_y, rel.equipment_repair_h,
                          [bus_idx[b]]))
    for line in installed_lines(cfg, design):
        affected = [bus_idx[b] for b in buses if line.id in paths[b]]
        rate = rel.line_rate(line)
        if affected and rate > 0:
            comps.append((rate, rel.line_repair(line), affected))

    horizon_hours = years * HOURS_PER_YEAR
    batch_len = horizon_hours / batches
    shape = (batches, nb)
    count_int = np.zeros(shape)
    dur_int = np.zeros(shape)
    ns_int = np.zeros(shape)
    count_isl = np.zeros(shape)
    dur_isl = np.zeros(shape)
    ns_isl = np.zeros(shape)

    if comps:
        total_rate = sum(c[0] for c in comps)
        n_events = rng.poisson(total_rate / HOURS_PER_YEAR * horizon_hours)
        times = np.sort(rng.uniform(0.0, horizon_hours, n_events))
        picks = rng.choice(len(comps), size=n_events,
                           p=[c[0] / total_rate for c in comps])
        days = rng.choice(len(cfg.days), size=n_events, p=day_probs)
        clock_end = -1.0
        for t, ci, d in zip(times, picks, days):
            rate, tau, affected = comps[ci]
            if t < clock_end:  # still repairing the previous fault
                continue
            clock_end = t + tau
            batch = min(int(t / batch_len), batches - 1)
            h0 = int(t) % HOURS
            for bi in affected:
                count_int[batch, bi] += 1.0
                dur_int[batch, bi] += tau
                ns_int[batch, bi] += _window_sum(pnet[buses[bi]][d], h0, tau)

    isl_rate = isl.events_per_year
    if isl_rate > 0 and not design.islandable:
        n_events = rng.poisson(isl_rate / HOURS_PER_YEAR * horizon_hours)
        times = np.sort(rng.uniform(0.0, horizon_hours, n_events))
        durs = rng.choice(isl.horizon_h, size=n_events,
                          p=np.array(isl.duration_probs)) + 1
        days = rng.choice(len(cfg.days), size=n_events, p=day_probs)
        for t, k, d in zip(times, durs, days):
            batch = min(int(t / batch_len), batches - 1)
            h0 = int(t) % HOURS
            for b in buses:
                bi = bus_idx[b]
                count_isl[batch, bi] += 1.0
                dur_isl[batch, bi] += float(k)
                ns_isl[batch, bi] += _window_sum(demand[b][d], h0, float(k))

    years_per_batch = years / batches

    def stats(mat):
        per_year = mat / years_per_batch
        mean = per_year.mean(axis=0)
        if batches > 1:
            hw = 3.0 * per_year.std(axis=0, ddof=1) / math.sqrt(batches)
        else:
            hw = np.zeros(nb)
        return mean, hw

    per_bus = {}
    half: dict[str, dict[str, float]] = {m: {} for m in
                                         ("u_rel", "saifi_int", "eens_int",
                                          "eens_isl", "saidi_isl", "eens")}
    m_ci, h_ci = stats(count_int)
    m_di, h_di = stats(dur_int)
    m_ni, h_ni = stats(ns_int)
    m_cs, h_cs = stats(count_isl)
    m_ds, h_ds = stats(dur_isl)
    m_ns, h_ns = stats(ns_isl)
    m_tot, h_tot = stats(ns_int + ns_isl)
    for b, bi in bus_idx.items():
        per_bus[b] = BusIndices(
            u_rel_h=float(m_di[bi]), saifi_int=float(m_ci[bi]),
            saidi_int=float(m_di[bi]), eens_int_kwh=float(m_ni[bi]),
            saifi_isl=float(m_cs[bi]), saidi_isl=float(m_ds[bi]),
            eens_isl_kwh=float(m_ns[bi]))
        half["u_rel"][b] = float(h_di[bi])
        half["saifi_int"][b] = float(h_ci[bi])
        half["eens_int"][b] = float(h_ni[bi])
        half["eens_isl"][b] = float(h_ns[bi])
        half["saidi_isl"][b] = float(h_ds[bi])
        half["eens"][b] = float(h_tot[bi])
    c_rel = sum(rel.cost_ns_of(b) * ix.eens_int_kwh for b, ix in per_bus.items())
    return McResult(ReliabilityReport(per_bus, c_rel), half, years, seed)
