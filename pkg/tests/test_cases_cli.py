import dataclasses
import json

import pytest
from click.testing import CliRunner

from mgdesign import cases, ccg, io, toys
from mgdesign.cli import main
from mgdesign.model import ScenarioError, validate_scenario


@pytest.fixture(scope="module")
def toy():
    return toys.toy_feeder()


@pytest.fixture(scope="module")
def toy_reports(toy):
    return {case: cases.run_case(toy, case) for case in cases.CASES}


def partition_toy():
    """Toy variant with a DG candidate in each half so both halves can island."""
    cfg = toys.toy_feeder()
    ders = tuple(dataclasses.replace(s, candidate_buses=("b1", "b3"))
                 if s.kind == "DG" else s for s in cfg.ders)
    return validate_scenario(dataclasses.replace(cfg, ders=ders))


class TestRunCase:
    def test_base_on_passive_scenario_has_zero_invest(self):
        cfg = toys.chain3()
        report = cases.run_case(cfg, "base")
        assert report.costs["invest"] == pytest.approx(0.0, abs=1e-6)
        assert not report.design.islandable
        # islanding and reliability are still priced, ex post
        assert report.costs["resilience"] > 0
        assert report.costs["reliability"] > 0

    def test_full_charges_islanding_enablement(self, toy_reports):
        toy = toys.toy_feeder()
        adder = 2.0 * toy.annual_demand_kwh / 1000.0
        assert toy_reports["full"].costs["islanding_enablement"] == pytest.approx(adder)
        assert toy_reports["base"].costs["islanding_enablement"] == 0.0

    def test_full_reliability_cost_not_above_resilience_case(self, toy_reports):
        assert (toy_reports["full"].costs["reliability"]
                <= toy_reports["resilience"].costs["reliability"] + 1e-6)

    def test_full_has_minimum_total(self, toy_reports):
        full_total = toy_reports["full"].costs["total"]
        for case, report in toy_reports.items():
            assert full_total <= report.costs["total"] * (1 + 1e-6)

    def test_cost_stack_reconciles(self, toy_reports):
        for report in toy_reports.values():
            parts = (report.costs["invest"] + report.costs["operations"]
                     + report.costs["resilience"] + report.costs["reliability"]
                     + report.costs["islanding_enablement"])
            assert parts == pytest.approx(report.costs["total"], rel=1e-9)

    def test_report_is_deterministic(self, toy):
        a = cases.run_case(toy, "base").to_dict()
        b = cases.run_case(toy, "base").to_dict()
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_unknown_case_rejected(self, toy):
        with pytest.raises(ScenarioError):
            cases.run_case(toy, "everything")


class TestSweep:
    def test_single_point_equals_run_case(self, toy, toy_reports):
        table = cases.sweep(toy)
        assert len(table["rows"]) == 1
        row = table["rows"][0]
        assert row["status"] == "ok"
        assert row["total_usd"] == pytest.approx(
            toy_reports["full"].costs["total"], rel=1e-6)

    def test_failures_recorded_not_raised(self, toy):
        # horizon sweep on a scenario without GEV parameters fails per point
        cfg = dataclasses.replace(toy, islanding=dataclasses.replace(
            toy.islanding, gev=None))
        table = cases.sweep(cfg, durations=(6,))
        assert table["rows"][0]["status"] == "failed"
        assert "GEV" in table["rows"][0]["error"]


class TestPartition:
    def test_identity_partition_matches_full(self, toy, toy_reports):
        result = cases.partition(
            toy, [{"name": "all", "buses": list(toy.network.bus_ids),
                   "pcc": "b0"}])
        agg = result["aggregate"]
        assert agg["costs"]["total"] == pytest.approx(
            toy_reports["full"].costs["total"], rel=1e-6)

    def test_two_partitions_duplicate_investment(self):
        cfg = partition_toy()
        whole = cases.run_case(cfg, "full")
        split = cases.partition(cfg, [
            {"name": "north", "buses": ["b0", "b1"], "pcc": "b0"},
            {"name": "south", "buses": ["b2", "b3"], "pcc": "b3"},
        ])
        agg = split["aggregate"]
        assert agg["costs"]["invest"] >= whole.costs["invest"] - 1e-6
        for rep in split["per_mg"].values():
            assert rep.design.islandable

    def test_partitions_must_cover_and_not_overlap(self, toy):
        with pytest.raises(ScenarioError, match="cover"):
            cases.partition(toy, [{"name": "a", "buses": ["b0", "b1"],
                                   "pcc": "b0"}])
        with pytest.raises(ScenarioError, match="overlap"):
            cases.partition(toy, [
                {"name": "a", "buses": ["b0", "b1", "b2"], "pcc": "b0"},
                {"name": "b", "buses": ["b2", "b3"], "pcc": "b3"}])

    def test_pcc_must_live_inside_partition(self, toy):
        with pytest.raises(ScenarioError, match="PCC"):
            cases.partition(toy, [
                {"name": "a", "buses": ["b0", "b1"], "pcc": "b3"},
                {"name": "b", "buses": ["b2", "b3"], "pcc": "b3"}])


class TestMcValidate:
    def test_chain_passes(self):
        cfg = toys.chain3()
        report = cases.run_case(cfg, "base")
        result = cases.mc_validate(cfg, report.design, years=30_000, seed=5)
        assert result["pass"]

    def test_zero_rate_scenario_matches_exactly(self):
        cfg = toys.chain3()
        cfg = validate_scenario(dataclasses.replace(
            cfg, reliability=dataclasses.replace(
                cfg.reliability, cable_rate_per_mile_y=0.0, equipment_rate_y=0.0,
                default_cost_ns=0.0)))
        report = cases.run_case(cfg, "base")
        design = dataclasses.replace(report.design, islandable=True)
        result = cases.mc_validate(cfg, design, years=200, seed=1)
        assert result["pass"]
        for row in result["rows"]:
            assert row["analytic"] == row["monte_carlo"] == 0.0


class TestCli:
    def _write_scenario(self, tmp_path, cfg=None):
        path = tmp_path / "scenario.json"
        io.save_scenario(cfg or toys.toy_feeder(), path)
        return path

    def test_run_command(self, tmp_path):
        scen = self._write_scenario(tmp_path, toys.chain3())
        out = tmp_path / "report.json"
        result = CliRunner().invoke(main, [
            "run", "--scenario", str(scen), "--case", "base",
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert payload["case"] == "base"

    def test_run_writes_ccg_log(self, tmp_path):
        scen = self._write_scenario(tmp_path)
        out = tmp_path / "full.json"
        result = CliRunner().invoke(main, [
            "run", "--scenario", str(scen), "--case", "full",
            "--out", str(out), "--n0", "4"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "full.ccg.csv").exists()

    def test_validation_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = CliRunner().invoke(main, [
            "run", "--scenario", str(bad), "--case", "base",
            "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 2

    def test_solver_failure_exit_code(self, tmp_path):
        # demand with no candidate DER cannot island: the master is infeasible
        cfg = toys.infeasibility_toy()
        cfg = validate_scenario(dataclasses.replace(cfg, ders=()))
        scen = self._write_scenario(tmp_path, cfg)
        result = CliRunner().invoke(main, [
            "run", "--scenario", str(scen), "--case", "full",
            "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 3

    def test_mc_validate_command(self, tmp_path):
        cfg = toys.chain3()
        scen = self._write_scenario(tmp_path, cfg)
        report_path = tmp_path / "report.json"
        cases.run_case(cfg, "base").save(report_path)
        result = CliRunner().invoke(main, [
            "mc-validate", "--scenario", str(scen), "--design",
            str(report_path), "--years", "20000", "--seed", "3"])
        assert result.exit_code == 0, result.output
        assert "PASS" in result.output

    def test_mc_validate_rejects_corrupt_design(self, tmp_path):
        cfg = toys.chain3()
        scen = self._write_scenario(tmp_path, cfg)
        corrupt = tmp_path / "corrupt.json"
        corrupt.write_text(json.dumps({"costs": {}}))
        result = CliRunner().invoke(main, [
            "mc-validate", "--scenario", str(scen), "--design", str(corrupt),
            "--years", "100"])
        assert result.exit_code == 2

    def test_sweep_command(self, tmp_path):
        scen = self._write_scenario(tmp_path)
        out = tmp_path / "sweep.json"
        result = CliRunner().invoke(main, [
            "sweep", "--scenario", str(scen), "--rg-scales", "1.0",
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = json.loads(out.read_text())["rows"]
        assert rows and rows[0]["status"] == "ok"

    def test_partition_command(self, tmp_path):
        cfg = partition_toy()
        scen = self._write_scenario(tmp_path, cfg)
        spec = tmp_path / "parts.json"
        spec.write_text(json.dumps({"partitions": [
            {"name": "north", "buses": ["b0", "b1"], "pcc": "b0"},
            {"name": "south", "buses": ["b2", "b3"], "pcc": "b3"},
        ]}))
        out = tmp_path / "partition.json"
        result = CliRunner().invoke(main, [
            "partition", "--scenario", str(scen), "--spec", str(spec),
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert set(payload["per_mg"]) == {"north", "south"}
