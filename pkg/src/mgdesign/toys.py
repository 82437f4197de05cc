"""Synthetic feeders shipped with the package.

Real utility datasets stay outside the repo; these scenarios are small
enough for the extensive form to act as a ground-truth oracle while still
exercising every model feature (candidate DER and lines, PV, islanding,
reliability). Values are chosen so the four design cases separate
cleanly: grid supply is cheap enough that the base case installs nothing,
and islanding support requires real DG plus storage investment.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .model import (HOURS, AlgorithmParams, Bus, DerSpec, GevParams, Line,
                    NetworkModel, RepresentativeDay, ReliabilityData,
                    ScenarioConfig, TariffSchedule,
                    build_islanding_distribution, validate_scenario)

_DAY_SHAPE = (0.55, 0.50, 0.48, 0.47, 0.48, 0.53, 0.62, 0.74, 0.84, 0.90,
              0.93, 0.95, 0.96, 0.94, 0.92, 0.91, 0.93, 0.97, 1.00, 0.98,
              0.90, 0.78, 0.68, 0.60)

_SUN_SHAPE = (0.0, 0.0, 0.0, 0.0, 0.0, 0.02, 0.12, 0.30, 0.50, 0.68,
              0.82, 0.92, 0.96, 0.94, 0.85, 0.70, 0.52, 0.32, 0.14, 0.03,
              0.0, 0.0, 0.0, 0.0)


def _scaled(shape, scale):
    return tuple(round(scale * s, 4) for s in shape)


def storage_spec(buses=(), cost_scale: float = 1.0) -> DerSpec:
    """Li-ion storage technology sheet used across the shipped scenarios."""
    return DerSpec(
        kind="Storage", fixed_cost_usd=87360.0 * cost_scale,
        var_cost_usd=670.0 * cost_scale, lifetime_y=15.0,
        cost_p_usd_kwh=0.0, cost_q_usd_kvarh=0.0004,
        dod_max=0.85, eta_self=0.99, eta_ch=0.98, eta_d=0.98,
        f_c_per_h=1.0 / 3.0, n_cyc_max=1.0,
        candidate_buses=tuple(buses))


def dg_spec(buses=()) -> DerSpec:
    """Biogas micro-turbine sheet: full P/Q envelope, no power-factor floor."""
    return DerSpec(
        kind="DG", fixed_cost_usd=70250.0, var_cost_usd=2430.0,
        lifetime_y=13.3, cost_p_usd_kwh=0.122, cost_q_usd_kvarh=0.0004,
        f_p_max=1.0, f_q_max=1.0, pf_min=0.0,
        candidate_buses=tuple(buses))


def _block_shape(night: float, day: float, evening: float):
    """Piecewise-flat load: night 22-06, day 07-17, evening block 18-20."""
    out = []
    for h in range(HOURS):
        if h <= 6 or h >= 22:
            out.append(night)
        elif 18 <= h <= 20:
            out.append(evening)
        else:
            out.append(day)
    return tuple(float(v) for v in out)


def toy_feeder(pv_scale: float = 1.0, storage_cost_scale: float = 1.0,
               horizon_h: int = 4, n0: int = 4,
               mip_gap: float = 1e-4) -> ScenarioConfig:
    """Four-bus feeder: one DG site, one storage site behind a weak lateral.

    One representative day (weight 365), so there are 24 islanding events.
    The b2 load block each evening exceeds what its 60 kVA lateral can
    import, so storage there is needed for plain feasibility; DG at b3
    (cheap gensets, fuel above the import tariff, so pure backup) supplies
    everything else when islanded. The commercial bus b3 carries a high
    interruption penalty, which is what makes redundancy and self-supply
    pay off.
    """
    buses = (
        Bus("b0", pcc=True),
        Bus("b1", demand=True),
        Bus("b2", demand=True, pv_kw=round(15.0 * pv_scale, 6)),
        Bus("b3", demand=True),
    )
    lines = (
        Line("l01", "b0", "b1", r_pu=0.003, rating_kva=900.0, length_mi=0.3),
        Line("l13", "b1", "b3", r_pu=0.003, rating_kva=500.0, length_mi=0.3),
        Line("l32", "b3", "b2", r_pu=0.003, rating_kva=60.0, length_mi=0.3),
        Line("l30", "b3", "b0", r_pu=0.003, rating_kva=400.0, length_mi=0.4,
             status="candidate", cost_usd=55000.0, lifetime_y=40.0),
    )
    day = RepresentativeDay(
        weight=365.0,
        demand_kw={
            "b1": _block_shape(75.0, 135.0, 110.0),
            "b2": _block_shape(22.0, 38.0, 205.0),
            "b3": _block_shape(70.0, 95.0, 230.0),
        },
        rg_avail_pu={"b2": _SUN_SHAPE},
    )
    islanding = build_islanding_distribution(
        GevParams(mu=3.0, sigma=1.5, xi=0.1), horizon_h, 2.283e-4)
    dg = dataclasses.replace(dg_spec(("b3",)), var_cost_usd=500.0,
                             cost_p_usd_kwh=0.16)
    cfg = ScenarioConfig(
        network=NetworkModel(buses, lines, "b0", s_base_kva=1000.0),
        ders=(dg, dataclasses.replace(
            storage_spec(("b2",), storage_cost_scale), f_c_per_h=0.5)),
        days=(day,),
        tariff=TariffSchedule.flat(0.15, 0.04, reactive_usd_kvarh=0.0006),
        islanding=islanding,
        reliability=ReliabilityData(
            cable_rate_per_mile_y=0.1, cable_repair_h=4.0,
            equipment_rate_y=0.03, equipment_repair_h=4.0,
            default_cost_ns=3.3, cost_ns={"b3": 370.0}),
        params=AlgorithmParams(n_polygon=8, pwl_segments=4, ccg_eps=0.005,
                               ccg_n0=n0, mip_gap=mip_gap, time_limit_s=280.0),
    )
    return validate_scenario(cfg)


def chain3() -> ScenarioConfig:
    """PCC-b1-b2 chain with the standard cable/splice reliability data.

    Two one-mile cables at 0.1 failures per mile-year with four-hour
    repairs plus the demand-bus splice give the reference expected outage
    duration of 0.92 h/y at b2, and flat 50 kW demand makes the expected
    energy not supplied exactly 46 kWh/y.
    """
    buses = (Bus("b0", pcc=True), Bus("b1"), Bus("b2", demand=True))
    lines = (
        Line("l01", "b0", "b1", r_pu=0.01, rating_kva=400.0, length_mi=1.0),
        Line("l12", "b1", "b2", r_pu=0.01, rating_kva=400.0, length_mi=1.0),
    )
    day = RepresentativeDay(
        weight=365.0,
        demand_kw={"b2": (50.0,) * HOURS},
        rg_avail_pu={},
        pf={"b2": (1.0,) * HOURS},
    )
    cfg = ScenarioConfig(
        network=NetworkModel(buses, lines, "b0"),
        ders=(),
        days=(day,),
        tariff=TariffSchedule.flat(0.15, 0.07),
        islanding=build_islanding_distribution(GevParams(8.0, 4.0, 0.0), 24, 2.283e-4),
        reliability=ReliabilityData(
            cable_rate_per_mile_y=0.1, cable_repair_h=4.0,
            equipment_rate_y=0.03, equipment_repair_h=4.0,
            default_cost_ns=3.3),
        params=AlgorithmParams(n_polygon=8, pwl_segments=3),
    )
    return validate_scenario(cfg)


def two_day_toy() -> ScenarioConfig:
    """Toy feeder with two weighted representative days (high/low season).

    The well-fed buses swing by 12 % between days; the weak-lateral bus
    keeps its nominal block so its daily storage cycle stays rechargeable.
    """
    base = toy_feeder()
    low = base.days[0]
    high = RepresentativeDay(
        weight=165.0,
        demand_kw={b: (tuple(v * 1.12 for v in series) if b != "b2" else series)
                   for b, series in low.demand_kw.items()},
        rg_avail_pu=dict(low.rg_avail_pu),
        pf=dict(low.pf),
    )
    low = dataclasses.replace(low, weight=200.0)
    return validate_scenario(dataclasses.replace(base, days=(low, high)))


def random_toy(seed: int) -> ScenarioConfig:
    """Small randomized scenario for stress-testing the decomposition loop.

    Three buses, PV and demand levels drawn per seed, a short islanding
    horizon, and a deliberately small warm start so several iterations run.
    """
    rng = np.random.default_rng(seed)
    demand_1 = float(rng.uniform(40.0, 90.0))
    demand_2 = float(rng.uniform(30.0, 80.0))
    pv = float(rng.uniform(0.0, 60.0))
    peak_hour = int(rng.integers(0, HOURS))
    spike = float(rng.uniform(1.2, 1.8))
    base = np.array(_DAY_SHAPE)
    shape = base.copy()
    shape[peak_hour] *= spike
    buses = (
        Bus("b0", pcc=True),
        Bus("b1", demand=True, pv_kw=round(pv, 3)),
        Bus("b2", demand=True),
    )
    lines = (
        Line("l01", "b0", "b1", r_pu=0.012, rating_kva=500.0, length_mi=0.4),
        Line("l12", "b1", "b2", r_pu=0.010, rating_kva=400.0, length_mi=0.4),
    )
    day = RepresentativeDay(
        weight=365.0,
        demand_kw={
            "b1": tuple(round(v, 3) for v in shape * demand_1),
            "b2": tuple(round(v, 3) for v in base * demand_2),
        },
        rg_avail_pu={"b1": _SUN_SHAPE},
    )
    horizon = int(rng.integers(2, 5))
    islanding = build_islanding_distribution(
        GevParams(mu=float(rng.uniform(1.0, 2.5)), sigma=float(rng.uniform(0.5, 1.5)),
                  xi=0.0), horizon, 2.283e-4)
    cfg = ScenarioConfig(
        network=NetworkModel(buses, lines, "b0"),
        ders=(dg_spec(("b2",)), storage_spec(("b1",))),
        days=(day,),
        tariff=TariffSchedule.flat(0.15, 0.07, reactive_usd_kvarh=0.0006),
        islanding=islanding,
        reliability=ReliabilityData(default_cost_ns=3.3),
        params=AlgorithmParams(n_polygon=8, pwl_segments=3,
                               ccg_eps=0.005, ccg_n0=int(rng.integers(1, 4)),
                               mip_gap=1e-4, time_limit_s=120.0),
    )
    return validate_scenario(cfg)


def infeasibility_toy() -> ScenarioConfig:
    """Scenario whose warm start misses a power-limited event.

    Storage is the only candidate. The top-ranked event window carries the
    most energy (a long plateau), while a later one-hour spike needs more
    inverter power than the plateau sizing provides, so its subproblem
    turns infeasible and must enter the master through the recourse
    branch.
    """
    demand = [2.0] * HOURS
    for h in (5, 6, 7):
        demand[h] = 12.0   # plateau: top-ranked three-hour window
    demand[15] = 26.0      # spike: lower energy, higher power
    buses = (Bus("b0", pcc=True), Bus("b1", demand=True))
    lines = (Line("l01", "b0", "b1", r_pu=0.01, rating_kva=300.0, length_mi=0.3),)
    day = RepresentativeDay(
        weight=365.0,
        demand_kw={"b1": tuple(demand)},
        rg_avail_pu={},
        pf={"b1": (1.0,) * HOURS},
    )
    islanding = build_islanding_distribution(
        GevParams(0.0, 1.0, 0.0), 3, 2.283e-4, point_mass_h=3)
    cfg = ScenarioConfig(
        network=NetworkModel(buses, lines, "b0"),
        ders=(storage_spec(("b1",)),),
        days=(day,),
        tariff=TariffSchedule.flat(0.15, 0.07),
        islanding=islanding,
        reliability=ReliabilityData(
            cable_rate_per_mile_y=0.0, cable_repair_h=0.0,
            equipment_rate_y=0.0, equipment_repair_h=0.0, default_cost_ns=0.0),
        params=AlgorithmParams(n_polygon=8, pwl_segments=3, ccg_eps=0.005,
                               ccg_n0=1, mip_gap=1e-4),
    )
    return validate_scenario(cfg)
