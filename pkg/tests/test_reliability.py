import dataclasses

import pytest

from mgdesign import toys
from mgdesign.ccg import DesignSolution
from mgdesign.model import (Bus, Line, NetworkModel, ReliabilityData,
                            validate_scenario)
from mgdesign.reliability import (ReliabilityError, analytic_indices,
                                  monte_carlo_oracle, net_demand_profile,
                                  supply_path)


def passive_design(cfg, islandable=False):
    ders = {}
    for b in cfg.network.buses:
        if b.pv_kw > 0:
            ders[f"pv@{b.id}"] = {"kind": "RG", "bus": b.id, "installed": True,
                                  "s_kw": b.pv_kw, "e_kwh": None}
    for spec in cfg.ders:
        for bus in spec.candidate_buses:
            ders[f"{spec.kind.lower()}@{bus}"] = {
                "kind": spec.kind, "bus": bus, "installed": False,
                "s_kw": 0.0, "e_kwh": 0.0}
    lines = {l.id: False for l in cfg.network.candidate_lines}
    return DesignSolution(ders, lines, {}, [[0.0] * 24], {}, 0.0,
                          islandable=islandable)


def design_with(cfg, installs, energy=None):
    d = passive_design(cfg)
    for uid, (kind, bus, s_kw, e_kwh) in installs.items():
        d.ders[uid] = {"kind": kind, "bus": bus, "installed": True,
                       "s_kw": s_kw, "e_kwh": e_kwh}
    if energy:
        d.energy_profile = energy
    return d


class TestAnalytic:
    def test_chain_reference_values(self):
        cfg = toys.chain3()
        rep = analytic_indices(cfg, passive_design(cfg))
        b2 = rep.per_bus["b2"]
        assert b2.u_rel_h == pytest.approx(0.92)
        assert b2.saifi_int == pytest.approx(0.23)
        assert b2.eens_int_kwh == pytest.approx(46.0)
        assert rep.c_rel_usd == pytest.approx(46.0 * 3.3)

    def test_islanding_additions_for_non_islandable(self):
        cfg = toys.chain3()
        rep = analytic_indices(cfg, passive_design(cfg, islandable=False))
        b2 = rep.per_bus["b2"]
        rate = cfg.islanding.events_per_year
        assert rate == pytest.approx(2.0, rel=1e-3)
        assert b2.saifi_isl == pytest.approx(rate)
        assert b2.saidi_isl == pytest.approx(rate * cfg.islanding.expected_duration_h)
        assert b2.saifi == pytest.approx(0.23 + rate, rel=1e-6)
        # flat 50 kW demand: expected unserved energy is rate * E[dur] * 50
        assert b2.eens_isl_kwh == pytest.approx(
            rate * cfg.islanding.expected_duration_h * 50.0, rel=1e-6)

    def test_islandable_design_has_no_islanding_terms(self):
        cfg = toys.chain3()
        rep = analytic_indices(cfg, passive_design(cfg, islandable=True))
        b2 = rep.per_bus["b2"]
        assert b2.saifi_isl == 0.0 and b2.saidi_isl == 0.0 and b2.eens_isl_kwh == 0.0
        assert b2.saifi == b2.saifi_int

    def test_zero_rates_zero_internal_indices(self):
        cfg = toys.chain3()
        cfg = validate_scenario(dataclasses.replace(cfg, reliability=ReliabilityData(
            cable_rate_per_mile_y=0.0, cable_repair_h=0.0,
            equipment_rate_y=0.0, equipment_repair_h=0.0, default_cost_ns=0.0)))
        rep = analytic_indices(cfg, passive_design(cfg, islandable=True))
        sys = rep.system
        assert sys["eens_kwh"] == 0.0 and sys["saifi"] == 0.0 and sys["saidi_h"] == 0.0

    def test_parallel_path_never_increases_outage(self):
        cfg = toys.toy_feeder()
        base = passive_design(cfg)
        redundant = passive_design(cfg)
        redundant.candidate_lines = {l.id: True for l in cfg.network.candidate_lines}
        rep_a = analytic_indices(cfg, base)
        rep_b = analytic_indices(cfg, redundant)
        for bus in rep_a.per_bus:
            assert rep_b.per_bus[bus].u_rel_h <= rep_a.per_bus[bus].u_rel_h + 1e-12

    def test_more_capacity_never_raises_net_demand(self):
        cfg = toys.chain3()
        small = design_with(cfg, {"dg@b2": ("DG", "b2", 10.0, None)})
        big = design_with(cfg, {"dg@b2": ("DG", "b2", 40.0, None)})
        p_small = net_demand_profile(cfg, small, "b2")
        p_big = net_demand_profile(cfg, big, "b2")
        assert (p_big <= p_small + 1e-12).all()

    def test_full_self_supply_zeroes_internal_eens(self):
        cfg = toys.chain3()
        cfg = validate_scenario(dataclasses.replace(
            cfg, ders=(toys.dg_spec(("b2",)),)))
        covered = design_with(cfg, {"dg@b2": ("DG", "b2", 60.0, None)})
        rep = analytic_indices(cfg, covered)
        assert rep.per_bus["b2"].eens_int_kwh == pytest.approx(0.0, abs=1e-9)
        # outage duration itself is unchanged: self-supply reduces energy, not faults
        assert rep.per_bus["b2"].u_rel_h == pytest.approx(0.92)

    def test_disconnected_bus_raises(self):
        cfg = toys.toy_feeder()
        design = passive_design(cfg)
        # pretend the only path line is a candidate that was not built
        network = cfg.network
        lines = tuple(dataclasses.replace(l, status="candidate")
                      if l.id == "l01" else l for l in network.lines)
        broken = dataclasses.replace(cfg, network=dataclasses.replace(network,
                                                                       lines=lines))
        design.candidate_lines["l01"] = False
        with pytest.raises(ReliabilityError, match="disconnected"):
            analytic_indices(broken, design)

    def test_csv_table_has_split_columns(self, tmp_path):
        cfg = toys.chain3()
        rep = analytic_indices(cfg, passive_design(cfg))
        path = tmp_path / "rel.csv"
        rep.to_csv(path)
        header, row = path.read_text().splitlines()[:2]
        assert header.startswith("bus,u_rel_h,saifi")
        assert row.startswith("b2,0.92")

    def test_supply_path_prefers_low_failure_weight(self):
        buses = (Bus("s", pcc=True), Bus("d", demand=True))
        lines = (Line("cheap", "s", "d", r_pu=0.01, rating_kva=100, length_mi=0.1),
                 Line("costly", "s", "d", r_pu=0.01, rating_kva=100, length_mi=9.0,
                      status="candidate", cost_usd=1.0))
        day = toys.chain3().days[0]
        day = dataclasses.replace(day, demand_kw={"d": day.demand_kw["b2"]},
                                  pf={"d": day.pf["b2"]})
        cfg = dataclasses.replace(toys.chain3(),
                                  network=NetworkModel(buses, lines, "s"),
                                  days=(day,))
        cfg = validate_scenario(cfg)
        design = passive_design(cfg)
        design.candidate_lines["costly"] = True
        assert supply_path(cfg, design, "d") == ["cheap"]


class TestMonteCarlo:
    def test_zero_rates_all_zero(self):
        cfg = toys.chain3()
        cfg = validate_scenario(dataclasses.replace(cfg, reliability=ReliabilityData(
            cable_rate_per_mile_y=0.0, cable_repair_h=0.0,
            equipment_rate_y=0.0, equipment_repair_h=0.0, default_cost_ns=0.0)))
        mc = monte_carlo_oracle(cfg, passive_design(cfg, islandable=True),
                                years=500, seed=1)
        sys = mc.report.system
        assert sys["eens_kwh"] == 0.0 and sys["saifi"] == 0.0

    def test_chain_matches_analytic_within_band(self):
        cfg = toys.chain3()
        design = passive_design(cfg, islandable=False)
        analytic = analytic_indices(cfg, design)
        mc = monte_carlo_oracle(cfg, design, years=100_000, seed=7)
        a, m = analytic.per_bus["b2"], mc.report.per_bus["b2"]
        assert abs(a.u_rel_h - m.u_rel_h) <= max(mc.band("u_rel", "b2"),
                                                 0.02 * a.u_rel_h)
        assert abs(a.eens_int_kwh - m.eens_int_kwh) <= max(
            mc.band("eens_int", "b2"), 0.02 * a.eens_int_kwh)
        assert abs(a.eens_isl_kwh - m.eens_isl_kwh) <= max(
            mc.band("eens_isl", "b2"), 0.02 * a.eens_isl_kwh)

    def test_islandable_design_cuts_eens_by_ninety_percent(self):
        cfg = toys.chain3()
        non = monte_carlo_oracle(cfg, passive_design(cfg, islandable=False),
                                 years=20_000, seed=3)
        isl = monte_carlo_oracle(cfg, passive_design(cfg, islandable=True),
                                 years=20_000, seed=3)
        total_non = non.report.system["eens_kwh"]
        total_isl = isl.report.system["eens_kwh"]
        assert total_isl <= 0.1 * total_non

    def test_deterministic_given_seed(self):
        cfg = toys.chain3()
        design = passive_design(cfg)
        a = monte_carlo_oracle(cfg, design, years=2000, seed=11)
        b = monte_carlo_oracle(cfg, design, years=2000, seed=11)
        assert a.report.to_dict() == b.report.to_dict()

    def test_rejects_zero_years(self):
        cfg = toys.chain3()
        with pytest.raises(ReliabilityError):
            monte_carlo_oracle(cfg, passive_design(cfg), years=0)
