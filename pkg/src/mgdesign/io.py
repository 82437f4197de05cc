"""File ingestion and serialization.

Formats (documented in the README):

* network: JSON with ``s_base_kva``, ``pcc``, ``buses`` and ``lines``.
* time series: CSV with one row per (day, hour) and one ``dem_<bus>``
  column per demand bus (kW) plus optional ``rg_<bus>`` availability
  columns (per unit of installed capacity).
* scenario: JSON tying everything together; representative days can be
  embedded directly or derived from a series file via clustering.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from . import cluster
from .model import (HOURS, AlgorithmParams, Bus, DerSpec, GevParams,
                    IslandingModel, Line, NetworkModel, ParseError,
                    RepresentativeDay, ReliabilityData, ScenarioConfig,
                    TariffSchedule, build_islanding_distribution,
                    validate_scenario)

SCHEMA_VERSION = 1


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ParseError(f"{where}: missing required field {key!r}")
    return mapping[key]


# ---------------------------------------------------------------------------
# network


def load_network(path) -> NetworkModel:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    buses = []
    for i, b in enumerate(_require(raw, "buses", str(path))):
        where = f"{path}: buses[{i}]"
        buses.append(Bus(
            id=str(_require(b, "id", where)),
            demand=bool(b.get("demand", False)),
            pcc=bool(b.get("pcc", False)),
            pv_kw=float(b.get("pv_kw", 0.0)),
            v_min=float(b.get("v_min_pu2", Bus.v_min)),
            v_max=float(b.get("v_max_pu2", Bus.v_max)),
        ))
    lines = []
    for i, l in enumerate(_require(raw, "lines", str(path))):
        where = f"{path}: lines[{i}]"
        lines.append(Line(
            id=str(_require(l, "id", where)),
            from_bus=str(_require(l, "from", where)),
            to_bus=str(_require(l, "to", where)),
            r_pu=float(_require(l, "r_pu", where)),
            rating_kva=float(_require(l, "rating_kva", where)),
            length_mi=float(_require(l, "length_mi", where)),
            status=str(l.get("status", "existing")),
            cost_usd=float(l.get("cost_usd", 0.0)),
            lifetime_y=float(l.get("lifetime_y", 40.0)),
            x_pu=float(l["x_pu"]) if "x_pu" in l else None,
        ))
    net = NetworkModel(tuple(buses), tuple(lines),
                       pcc=str(_require(raw, "pcc", str(path))),
                       s_base_kva=float(raw.get("s_base_kva", 1000.0)))
    errs = net.validate()
    if errs:
        raise ParseError([f"{path}: {e}" for e in errs])
    return net


def network_to_dict(net: NetworkModel) -> dict:
    return {
        "s_base_kva": net.s_base_kva,
        "pcc": net.pcc,
        "buses": [{"id": b.id, "demand": b.demand, "pcc": b.pcc,
                   "pv_kw": b.pv_kw, "v_min_pu2": b.v_min, "v_max_pu2": b.v_max}
                  for b in net.buses],
        "lines": [{"id": l.id, "from": l.from_bus, "to": l.to_bus,
                   "r_pu": l.r_pu, "x_pu": l.x_eff, "rating_kva": l.rating_kva,
                   "length_mi": l.length_mi, "status": l.status,
                   "cost_usd": l.cost_usd, "lifetime_y": l.lifetime_y}
                  for l in net.lines],
    }


def save_network(net: NetworkModel, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1, sort_keys=True))


# ---------------------------------------------------------------------------
# time series + clustering


def load_series(path):
    """Read the (day, hour) CSV; returns ({bus: (days, 24) demand kW},
    {bus: (days, 24) availability pu})."""
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from None
    for col in ("day", "hour"):
        if col not in frame.columns:
            raise ParseError(f"{path}: missing required column {col!r}")
    n_days = int(frame["day"].max()) + 1
    if len(frame) != n_days * HOURS:
        raise ParseError(f"{path}: expected {n_days * HOURS} rows for {n_days} "
                         f"complete days, found {len(frame)}")
    frame = frame.sort_values(["day", "hour"]).reset_index(drop=True)
    expected_hours = np.tile(np.arange(HOURS), n_days)
    if not (frame["hour"].to_numpy() == expected_hours).all():
        raise ParseError(f"{path}: missing hours; every day needs hours 0..23")
    demand, rg = {}, {}
    for col in frame.columns:
        if col.startswith("dem_"):
            demand[col[4:]] = frame[col].to_numpy().reshape(n_days, HOURS)
        elif col.startswith("rg_"):
            rg[col[3:]] = frame[col].to_numpy().reshape(n_days, HOURS)
    if not demand:
        raise ParseError(f"{path}: no dem_<bus> columns found")
    return demand, rg


def build_representative_days(demand, rg, k: int, seed: int = 0,
                              pf: float | None = None):
    """Cluster raw daily series into weighted representative days."""
    features = {f"dem_{b}": arr for b, arr in demand.items()}
    features.update({f"rg_{b}": arr for b, arr in rg.items()})
    medoids, sizes = cluster.cluster_representative_days(features, k, seed)
    scale = sum(sizes)
    days = []
    for med, size in zip(medoids, sizes):
        kwargs = {}
        if pf is not None:
            kwargs["pf"] = {b: (pf,) * HOURS for b in demand}
        days.append(RepresentativeDay(
            weight=size * 365.0 / scale,
            demand_kw={b: tuple(float(v) for v in arr[med]) for b, arr in demand.items()},
            rg_avail_pu={b: tuple(float(v) for v in arr[med]) for b, arr in rg.items()},
            **kwargs))
    return tuple(days)


# ---------------------------------------------------------------------------
# scenario


def _day_to_dict(day: RepresentativeDay) -> dict:
    return {"weight": day.weight,
            "demand_kw": {b: list(v) for b, v in day.demand_kw.items()},
            "rg_avail_pu": {b: list(v) for b, v in day.rg_avail_pu.items()},
            "pf": {b: list(v) for b, v in day.pf.items()}}


def _day_from_dict(raw: dict) -> RepresentativeDay:
    return RepresentativeDay(
        weight=float(raw["weight"]),
        demand_kw={b: tuple(map(float, v)) for b, v in raw.get("demand_kw", {}).items()},
        rg_avail_pu={b: tuple(map(float, v)) for b, v in raw.get("rg_avail_pu", {}).items()},
        pf={b: tuple(map(float, v)) for b, v in raw.get("pf", {}).items()})


_DER_FIELDS = ("kind", "fixed_cost_usd", "var_cost_usd", "lifetime_y",
               "cost_p_usd_kwh", "cost_q_usd_kvarh", "f_p_max", "f_q_max",
               "pf_min", "dod_max", "eta_self", "eta_ch", "eta_d",
               "f_c_per_h", "n_cyc_max")


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    isl = cfg.islanding
    return {
        "schema_version": SCHEMA_VERSION,
        "network": network_to_dict(cfg.network),
        "representative_days": [_day_to_dict(d) for d in cfg.days],
        "ders": [{**{f: getattr(s, f) for f in _DER_FIELDS},
                  "candidate_buses": list(s.candidate_buses)} for s in cfg.ders],
        "tariff": {
            "import_usd_kwh": list(cfg.tariff.import_usd_kwh),
            "export_usd_kwh": list(cfg.tariff.export_usd_kwh),
            "reactive_usd_kvarh": cfg.tariff.reactive_usd_kvarh,
            "curtail_usd_kwh": cfg.tariff.curtail_usd_kwh,
            "interest_rate": cfg.tariff.interest_rate,
        },
        "islanding": {
            "p_start": isl.p_start,
            "horizon_h": isl.horizon_h,
            "gev": None if isl.gev is None else
                {"mu": isl.gev.mu, "sigma": isl.gev.sigma, "xi": isl.gev.xi},
            "point_mass_h": isl.point_mass_h,
            "duration_probs": list(isl.duration_probs),
        },
        "reliability": {
            "cable_rate_per_mile_y": cfg.reliability.cable_rate_per_mile_y,
            "cable_repair_h": cfg.reliability.cable_repair_h,
            "equipment_rate_y": cfg.reliability.equipment_rate_y,
            "equipment_repair_h": cfg.reliability.equipment_repair_h,
            "default_cost_ns": cfg.reliability.default_cost_ns,
            "cost_ns": dict(cfg.reliability.cost_ns),
            "line_rate_override": dict(cfg.reliability.line_rate_override),
            "line_repair_override": dict(cfg.reliability.line_repair_override),
        },
        "algorithm": {f: getattr(cfg.params, f) for f in (
            "n_polygon", "pwl_segments", "big_m_factor", "ccg_eps", "ccg_n0",
            "mip_gap", "time_limit_s", "seed", "threads", "max_extensive_vars")},
    }


def scenario_from_dict(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    where = "scenario"
    net_field = _require(raw, "network", where)
    if isinstance(net_field, str):
        net = load_network((base_dir or Path(".")) / net_field)
    else:
        buses = tuple(Bus(id=str(b["id"]), demand=bool(b.get("demand", False)),
                          pcc=bool(b.get("pcc", False)),
                          pv_kw=float(b.get("pv_kw", 0.0)),
                          v_min=float(b.get("v_min_pu2", Bus.v_min)),
                          v_max=float(b.get("v_max_pu2", Bus.v_max)))
                      for b in net_field["buses"])
        lines = tuple(Line(id=str(l["id"]), from_bus=str(l["from"]),
                           to_bus=str(l["to"]), r_pu=float(l["r_pu"]),
                           rating_kva=float(l["rating_kva"]),
                           length_mi=float(l["length_mi"]),
                           status=str(l.get("status", "existing")),
                           cost_usd=float(l.get("cost_usd", 0.0)),
                           lifetime_y=float(l.get("lifetime_y", 40.0)),
                           x_pu=float(l["x_pu"]) if "x_pu" in l else None)
                      for l in net_field["lines"])
        net = NetworkModel(buses, lines, pcc=str(net_field["pcc"]),
                           s_base_kva=float(net_field.get("s_base_kva", 1000.0)))

    if "representative_days" in raw:
        days = tuple(_day_from_dict(d) for d in raw["representative_days"])
    elif "series" in raw:
        series = raw["series"]
        demand, rg = load_series((base_dir or Path(".")) / series["file"])
        days = build_representative_days(
            demand, rg, int(series.get("cluster_days", 8)),
            int(series.get("seed", 0)), series.get("pf"))
    else:
        raise ParseError("scenario: needs representative_days or a series file")

    ders = tuple(DerSpec(**{f: s[f] for f in _DER_FIELDS if f in s},
                         candidate_buses=tuple(s.get("candidate_buses", ())))
                 for s in raw.get("ders", []))

    t = raw.get("tariff", {})
    def _hourly(value, default):
        if value is None:
            value = default
        if isinstance(value, (int, float)):
            return (float(value),) * HOURS
        return tuple(float(v) for v in value)
    tariff = TariffSchedule(
        import_usd_kwh=_hourly(t.get("import_usd_kwh"), 0.15),
        export_usd_kwh=_hourly(t.get("export_usd_kwh"), 0.07),
        reactive_usd_kvarh=float(t.get("reactive_usd_kvarh", 0.0)),
        curtail_usd_kwh=float(t.get("curtail_usd_kwh", 0.0)),
        interest_rate=float(t.get("interest_rate", 0.05)))

    i = _require(raw, "islanding", where)
    gev = GevParams(**i["gev"]) if i.get("gev") else None
    if "duration_probs" in i:
        isl = IslandingModel(p_start=float(i["p_start"]),
                             duration_probs=tuple(map(float, i["duration_probs"])),
                             gev=gev, horizon_h=int(i["horizon_h"]),
                             point_mass_h=i.get("point_mass_h"))
    else:
        if gev is None:
            raise ParseError("scenario: islanding needs gev parameters or "
                             "explicit duration_probs")
        isl = build_islanding_distribution(gev, int(i.get("horizon_h", 24)),
                                           float(i["p_start"]),
                                           i.get("point_mass_h"))

    r = raw.get("reliability", {})
    rel = ReliabilityData(
        cable_rate_per_mile_y=float(r.get("cable_rate_per_mile_y", 0.1)),
        cable_repair_h=float(r.get("cable_repair_h", 4.0)),
        equipment_rate_y=float(r.get("equipment_rate_y", 0.03)),
        equipment_repair_h=float(r.get("equipment_repair_h", 4.0)),
        default_cost_ns=float(r.get("default_cost_ns", 3.3)),
        cost_ns={str(k): float(v) for k, v in r.get("cost_ns", {}).items()},
        line_rate_override={str(k): float(v)
                            for k, v in r.get("line_rate_override", {}).items()},
        line_repair_override={str(k): float(v)
                              for k, v in r.get("line_repair_override", {}).items()})

    params = AlgorithmParams(**raw.get("algorithm", {}))
    return validate_scenario(ScenarioConfig(net, ders, days, tariff, isl, rel, params))


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return scenario_from_dict(raw, base_dir=path.parent)


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(cfg), indent=1, sort_keys=True))
