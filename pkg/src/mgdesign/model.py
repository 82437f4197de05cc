"""Domain model: feeder, DER catalog, tariffs, islanding and reliability data.

Everything here is an immutable dataclass; ``validate_scenario`` checks the
cross-cutting invariants once and the validated ``ScenarioConfig`` can then
be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

HOURS = 24
DAYS_PER_YEAR = 365
HOURS_PER_YEAR = HOURS * DAYS_PER_YEAR

KIND_DG = "DG"
KIND_RG = "RG"
KIND_STORAGE = "Storage"

DEFAULT_V_MIN = 0.95 ** 2
DEFAULT_V_MAX = 1.05 ** 2
DEFAULT_PF = 0.95


class ScenarioError(ValueError):
    """Scenario data violates one or more model invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ParseError(ScenarioError):
    """Input file could not be parsed against the documented schema."""


@dataclass(frozen=True)
class Bus:
    id: str
    demand: bool = False
    pcc: bool = False
    pv_kw: float = 0.0
    v_min: float = DEFAULT_V_MIN  # squared per-unit voltage bounds
    v_max: float = DEFAULT_V_MAX


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    r_pu: float
    rating_kva: float
    length_mi: float
    status: str = "existing"  # "existing" | "candidate"
    cost_usd: float = 0.0
    lifetime_y: float = 40.0
    x_pu: float | None = None  # reactance; defaults to r_pu when omitted

    @property
    def x_eff(self) -> float:
        return self.r_pu if self.x_pu is None else self.x_pu

    @property
    def candidate(self) -> bool:
        return self.status == "candidate"


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    pcc: str
    s_base_kva: float = 1000.0

    def bus(self, bus_id: str) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(bus_id)

    @property
    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    @property
    def demand_buses(self) -> list[str]:
        return [b.id for b in self.buses if b.demand]

    @property
    def existing_lines(self) -> list[Line]:
        return [l for l in self.lines if not l.candidate]

    @property
    def candidate_lines(self) -> list[Line]:
        return [l for l in self.lines if l.candidate]

    def adjacent(self, bus_id: str) -> list[Line]:
        return [l for l in self.lines if bus_id in (l.from_bus, l.to_bus)]

    def validate(self) -> list[str]:
        errs = []
        ids = self.bus_ids
        if len(set(ids)) != len(ids):
            errs.append("duplicate bus ids")
        pccs = [b.id for b in self.buses if b.pcc]
        if len(pccs) != 1:
            errs.append(f"exactly one PCC bus required, found {len(pccs)}")
        elif pccs[0] != self.pcc:
            errs.append(f"pcc field {self.pcc!r} does not match flagged bus {pccs[0]!r}")
        if self.s_base_kva <= 0:
            errs.append("s_base_kva must be > 0")
        line_ids = [l.id for l in self.lines]
        if len(set(line_ids)) != len(line_ids):
            errs.append("duplicate line ids")
        for l in self.lines:
            for end in (l.from_bus, l.to_bus):
                if end not in ids:
                    errs.append(f"line {l.id}: unknown bus {end!r}")
            if l.r_pu <= 0 or l.rating_kva <= 0 or l.length_mi <= 0:
                errs.append(f"line {l.id}: resistance, rating and length must be > 0")
            if l.status not in ("existing", "candidate"):
                errs.append(f"line {l.id}: bad status {l.status!r}")
            if l.candidate and l.lifetime_y <= 0:
                errs.append(f"line {l.id}: candidate lifetime must be > 0")
        for b in self.buses:
            if not (b.v_min < b.v_max):
                errs.append(f"bus {b.id}: v_min must be < v_max")
            if b.pv_kw < 0:
                errs.append(f"bus {b.id}: pv_kw must be >= 0")
        if not errs:
            errs.extend(self._check_radial())
        return errs

    def _check_radial(self) -> list[str]:
        """The existing-line subgraph must be a tree spanning all buses."""
        existing = self.existing_lines
        n = len(self.buses)
        if len(existing) != n - 1:
            return [f"existing subgraph not radial: {len(existing)} lines for {n} buses"]
        adj: dict[str, list[str]] = {b.id: [] for b in self.buses}
        for l in existing:
            adj[l.from_bus].append(l.to_bus)
            adj[l.to_bus].append(l.from_bus)
        seen = {self.pcc}
        stack = [self.pcc]
        while stack:
            b = stack.pop()
            for nb in adj[b]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if len(seen) != n:
            return ["existing subgraph not radial: disconnected from PCC"]
        return []


@dataclass(frozen=True)
class DerSpec:
    """Technology sheet for one DER kind at its candidate buses.

    ``var_cost_usd`` is per kW for DG/RG and per kWh for storage. Power
    factor and output-fraction limits follow the generator convention; a
    ``pf_min`` of 0 disables the power-factor row.
    """

    kind: str
    fixed_cost_usd: float = 0.0
    var_cost_usd: float = 0.0
    lifetime_y: float = 15.0
    cost_p_usd_kwh: float = 0.0
    cost_q_usd_kvarh: float = 0.0
    f_p_max: float = 1.0
    f_q_max: float = 1.0
    pf_min: float = 0.0
    dod_max: float = 0.85
    eta_self: float = 0.99
    eta_ch: float = 0.98
    eta_d: float = 0.98
    f_c_per_h: float = 1.0 / 3.0
    n_cyc_max: float = 1.0
    candidate_buses: tuple[str, ...] = ()

    def validate(self) -> list[str]:
        errs = []
        tag = f"{self.kind} spec"
        if self.kind not in (KIND_DG, KIND_RG, KIND_STORAGE):
            errs.append(f"{tag}: unknown kind")
        for label, v in (("fixed cost", self.fixed_cost_usd),
                         ("variable cost", self.var_cost_usd),
                         ("active-power cost", self.cost_p_usd_kwh),
                         ("reactive-power cost", self.cost_q_usd_kvarh)):
            if v < 0:
                errs.append(f"{tag}: {label} must be >= 0")
        if self.lifetime_y <= 0:
            errs.append(f"{tag}: lifetime must be > 0")
        if not (0 <= self.f_p_max <= 1 and 0 <= self.f_q_max <= 1):
            errs.append(f"{tag}: output fractions must lie in [0, 1]")
        if not (0 <= self.pf_min <= 1):
            errs.append(f"{tag}: pf_min must lie in [0, 1]")
        if self.kind == KIND_STORAGE:
            for label, v in (("eta_self", self.eta_self), ("eta_ch", self.eta_ch),
                             ("eta_d", self.eta_d)):
                if not (0 < v <= 1):
                    errs.append(f"{tag}: {label} must lie in (0, 1]")
            if not (0 < self.dod_max <= 1):
                errs.append(f"{tag}: dod_max must lie in (0, 1]")
            if self.f_c_per_h <= 0:
                errs.append(f"{tag}: power/energy ratio must be > 0")
            if self.n_cyc_max <= 0:
                errs.append(f"{tag}: n_cyc_max must be > 0")
        return errs


@dataclass(frozen=True)
class RepresentativeDay:
    """One weighted typical day: per-bus hourly demand and RG availability."""

    weight: float
    demand_kw: Mapping[str, tuple[float, ...]]
    rg_avail_pu: Mapping[str, tuple[float, ...]]
    pf: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def pf_of(self, bus: str, hour: int) -> float:
        series = self.pf.get(bus)
        return series[hour] if series else DEFAULT_PF

    def p_dmd(self, bus: str, hour: int) -> float:
        series = self.demand_kw.get(bus)
        return series[hour] if series else 0.0

    def q_dmd(self, bus: str, hour: int) -> float:
        pf = self.pf_of(bus, hour)
        return self.p_dmd(bus, hour) * math.tan(math.acos(pf))

    def s_dmd(self, bus: str, hour: int) -> float:
        return self.p_dmd(bus, hour) / self.pf_of(bus, hour)

    def avail_pu(self, bus: str, hour: int) -> float:
        series = self.rg_avail_pu.get(bus)
        return series[hour] if series else 0.0

    def validate(self, label: str) -> list[str]:
        errs = []
        if self.weight <= 0:
            errs.append(f"{label}: weight must be > 0")
        for name, series in (("demand", self.demand_kw), ("rg_avail", self.rg_avail_pu),
                             ("pf", self.pf)):
            for bus, vals in series.items():
                if len(vals) != HOURS:
                    errs.append(f"{label}: {name}[{bus}] has {len(vals)} hours, expected {HOURS}")
        for bus, vals in self.rg_avail_pu.items():
            if any(v < 0 for v in vals):
                errs.append(f"{label}: rg_avail[{bus}] must be >= 0")
        for bus, vals in self.pf.items():
            if any(not (0 < v <= 1) for v in vals):
                errs.append(f"{label}: pf[{bus}] must lie in (0, 1]")
        for bus, vals in self.demand_kw.items():
            if any(v < 0 for v in vals):
                errs.append(f"{label}: demand[{bus}] must be >= 0")
        return errs


@dataclass(frozen=True)
class TariffSchedule:
    import_usd_kwh: tuple[float, ...]  # one price per hour of day
    export_usd_kwh: tuple[float, ...]
    reactive_usd_kvarh: float = 0.0
    curtail_usd_kwh: float = 0.0
    interest_rate: float = 0.05

    @staticmethod
    def flat(import_price: float, export_price: float, **kw) -> "TariffSchedule":
        return TariffSchedule((import_price,) * HOURS, (export_price,) * HOURS, **kw)

    def validate(self) -> list[str]:
        errs = []
        if len(self.import_usd_kwh) != HOURS or len(self.export_usd_kwh) != HOURS:
            errs.append(f"tariff: hourly price vectors must have {HOURS} entries")
            return errs
        for h, (ci, ce) in enumerate(zip(self.import_usd_kwh, self.export_usd_kwh)):
            if ci < 0 or ce < 0:
                errs.append(f"tariff: negative price at hour {h}")
            if ce > ci:
                errs.append(
                    f"tariff: export price exceeds import price at hour {h}; "
                    "the import/export cost split requires import >= export")
        if self.reactive_usd_kvarh < 0 or self.curtail_usd_kwh < 0:
            errs.append("tariff: reactive and curtailment prices must be >= 0")
        if self.interest_rate <= 0:
            errs.append("tariff: interest rate must be > 0")
        return errs


@dataclass(frozen=True)
class GevParams:
    mu: float
    sigma: float
    xi: float = 0.0


def gev_cdf(x: float, gev: GevParams) -> float:
    """Cumulative distribution of the generalized extreme value family."""
    if gev.sigma <= 0:
        raise ScenarioError("GEV scale must be > 0")
    z = (x - gev.mu) / gev.sigma
    if abs(gev.xi) < 1e-12:
        return math.exp(-math.exp(-z))
    t = 1.0 + gev.xi * z
    if t <= 0:
        # outside the support: lower tail for xi>0, upper tail for xi<0
        return 0.0 if gev.xi > 0 else 1.0
    return math.exp(-t ** (-1.0 / gev.xi))


@dataclass(frozen=True)
class IslandingModel:
    """Occurrence probability and truncated duration distribution of islanding.

    ``p_start`` is the probability that an islanding event begins in any
    given hourly step. ``duration_probs[k-1]`` is the probability that an
    event ends after exactly ``k`` hours, rescaled to sum to one at the
    design horizon.
    """

    p_start: float
    duration_probs: tuple[float, ...]
    gev: GevParams | None = None
    horizon_h: int = 24
    point_mass_h: int | None = None

    @property
    def expected_duration_h(self) -> float:
        return sum((k + 1) * p for k, p in enumerate(self.duration_probs))

    @property
    def events_per_year(self) -> float:
        return self.p_start * HOURS_PER_YEAR

    def survivor(self, k: int) -> float:
        """Probability the event lasts at least ``k`` hours (1-indexed)."""
        return sum(self.duration_probs[k - 1:])

    def validate(self) -> list[str]:
        errs = []
        if not (0 <= self.p_start <= 1):
            errs.append("islanding: p_start must lie in [0, 1]")
        if self.horizon_h < 1:
            errs.append("islanding: horizon must be >= 1 hour")
        if len(self.duration_probs) != self.horizon_h:
            errs.append("islanding: duration distribution length must equal the horizon")
        total = sum(self.duration_probs)
        if abs(total - 1.0) > 1e-9:
            errs.append(f"islanding: duration probabilities sum to {total!r}, expected 1")
        if any(p < 0 for p in self.duration_probs):
            errs.append("islanding: negative duration probability")
        return errs


def build_islanding_distribution(gev: GevParams, horizon_h: int, p_start: float,
                                 point_mass_h: int | None = None) -> IslandingModel:
    """Discretize the event-duration distribution and truncate at the horizon.

    Hour ``k`` receives the distribution mass between ``k-1`` and ``k``
    (mass below one hour is folded into the first step), rescaled by the
    probability of ending within the horizon so the masses sum to one.
    ``point_mass_h`` overrides the distribution with a deterministic
    duration, used for degenerate test cases.
    """
    if horizon_h < 1:
        raise ScenarioError("islanding horizon must be >= 1 hour")
    if not (0 <= p_start <= 1):
        raise ScenarioError("p_start must lie in [0, 1]")
    if point_mass_h is not None:
        if not (1 <= point_mass_h <= horizon_h):
            raise ScenarioError("point-mass duration must lie within the horizon")
        probs = [0.0] * horizon_h
        probs[point_mass_h - 1] = 1.0
        return IslandingModel(p_start, tuple(probs), gev, horizon_h, point_mass_h)
    total = gev_cdf(float(horizon_h), gev)
    if total <= 0.0:
        raise ScenarioError("no duration mass within the horizon; check GEV parameters")
    probs = []
    prev = 0.0
    for k in range(1, horizon_h + 1):
        cur = gev_cdf(float(k), gev)
        probs.append(max(0.0, cur - prev) / total)
        prev = cur
    return IslandingModel(p_start, tuple(probs), gev, horizon_h, None)


@dataclass(frozen=True)
class ReliabilityData:
    """Failure/repair data and interruption penalties.

    Line failure rates are per mile and year, scaled by each line's
    length; the equipment rate applies once per demand bus. ``cost_ns``
    maps bus ids to $/kWh of energy not supplied, with ``default_cost_ns``
    for unlisted buses.
    """

    cable_rate_per_mile_y: float = 0.1
    cable_repair_h: float = 4.0
    equipment_rate_y: float = 0.03
    equipment_repair_h: float = 4.0
    default_cost_ns: float = 3.3
    cost_ns: Mapping[str, float] = field(default_factory=dict)
    line_rate_override: Mapping[str, float] = field(default_factory=dict)
    line_repair_override: Mapping[str, float] = field(default_factory=dict)

    def line_rate(self, line: Line) -> float:
        if line.id in self.line_rate_override:
            return self.line_rate_override[line.id]
        return self.cable_rate_per_mile_y * line.length_mi

    def line_repair(self, line: Line) -> float:
        return self.line_repair_override.get(line.id, self.cable_repair_h)

    def tau_max(self, network: NetworkModel) -> float:
        if not network.lines:
            return self.cable_repair_h
        return max(self.line_repair(l) for l in network.lines)

    def cost_ns_of(self, bus: str) -> float:
        return self.cost_ns.get(bus, self.default_cost_ns)

    def validate(self) -> list[str]:
        errs = []
        vals = [self.cable_rate_per_mile_y, self.cable_repair_h,
                self.equipment_rate_y, self.equipment_repair_h, self.default_cost_ns]
        vals += list(self.cost_ns.values()) + list(self.line_rate_override.values())
        vals += list(self.line_repair_override.values())
        if any(v < 0 for v in vals):
            errs.append("reliability: rates, durations and penalties must be >= 0")
        return errs


@dataclass(frozen=True)
class AlgorithmParams:
    n_polygon: int = 12
    pwl_segments: int = 10
    big_m_factor: float = 3.0
    ccg_eps: float = 0.005
    ccg_n0: int = 24
    mip_gap: float = 0.005
    time_limit_s: float = 600.0
    seed: int = 0
    threads: int = 1
    max_extensive_vars: int = 400_000

    def validate(self) -> list[str]:
        errs = []
        if self.n_polygon < 4 or self.n_polygon % 2:
            errs.append("algorithm: n_polygon must be even and >= 4")
        if self.pwl_segments < 1:
            errs.append("algorithm: pwl_segments must be >= 1")
        if self.big_m_factor <= 0:
            errs.append("algorithm: big_m_factor must be > 0")
        if self.ccg_eps <= 0:
            errs.append("algorithm: ccg_eps must be > 0")
        if self.ccg_n0 < 1:
            errs.append("algorithm: ccg_n0 must be >= 1")
        if not (0 <= self.mip_gap < 1):
            errs.append("algorithm: mip_gap must lie in [0, 1)")
        if self.threads < 1:
            errs.append("algorithm: threads must be >= 1")
        return errs


@dataclass(frozen=True)
class ScenarioConfig:
    network: NetworkModel
    ders: tuple[DerSpec, ...]
    days: tuple[RepresentativeDay, ...]
    tariff: TariffSchedule
    islanding: IslandingModel
    reliability: ReliabilityData
    params: AlgorithmParams = field(default_factory=AlgorithmParams)

    def der_spec(self, kind: str) -> DerSpec | None:
        for spec in self.ders:
            if spec.kind == kind:
                return spec
        return None

    @property
    def annual_demand_kwh(self) -> float:
        return sum(day.weight * day.p_dmd(b, h)
                   for day in self.days for b in self.network.demand_buses
                   for h in range(HOURS))

    def peak_apparent_demand_kva(self) -> float:
        peak = 0.0
        for day in self.days:
            for h in range(HOURS):
                peak = max(peak, sum(day.s_dmd(b, h) for b in self.network.demand_buses))
        return peak


def annuity_factor(rate: float, lifetime_y: float) -> float:
    """Years of equivalent annual payments for one unit invested now.

    A zero rate is rejected rather than special-cased: callers always get
    the single closed-form expression.
    """
    if rate <= 0:
        raise ScenarioError("interest rate must be > 0")
    if lifetime_y <= 0:
        raise ScenarioError("lifetime must be > 0")
    return (1.0 - (1.0 + rate) ** (-lifetime_y)) / rate


def validate_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant and cross-reference; raise with the full list."""
    errs: list[str] = []
    errs.extend(cfg.network.validate())
    kinds = [s.kind for s in cfg.ders]
    if len(set(kinds)) != len(kinds):
        errs.append("duplicate DER kind in catalog")
    bus_ids = set(cfg.network.bus_ids)
    for spec in cfg.ders:
        errs.extend(spec.validate())
        for b in spec.candidate_buses:
            if b not in bus_ids:
                errs.append(f"{spec.kind} spec: unknown candidate bus {b!r}")
    if not cfg.days:
        errs.append("at least one representative day is required")
    total_weight = sum(d.weight for d in cfg.days)
    if cfg.days and abs(total_weight - DAYS_PER_YEAR) > 1e-6:
        errs.append(f"representative-day weights sum to {total_weight}, expected {DAYS_PER_YEAR}")
    demand_buses = set(cfg.network.demand_buses)
    for i, day in enumerate(cfg.days):
        label = f"day {i}"
        errs.extend(day.validate(label))
        missing = demand_buses - set(day.demand_kw)
        if missing:
            errs.append(f"{label}: no demand series for buses {sorted(missing)}")
        unknown = (set(day.demand_kw) | set(day.rg_avail_pu)) - bus_ids
        if unknown:
            errs.append(f"{label}: series for unknown buses {sorted(unknown)}")
    errs.extend(cfg.tariff.validate())
    errs.extend(cfg.islanding.validate())
    errs.extend(cfg.reliability.validate())
    errs.extend(cfg.params.validate())
    if errs:
        raise ScenarioError(errs)
    return cfg
