import json
from pathlib import Path

import pytest

from mgdesign import io, toys
from mgdesign.model import HOURS, ParseError

DATA = Path(__file__).parent / "data"


def write_chain_network(path, extra_lines=()):
    net = {
        "s_base_kva": 1000.0,
        "pcc": "b0",
        "buses": [
            {"id": "b0", "pcc": True},
            {"id": "b1", "demand": True},
            {"id": "b2", "demand": True},
        ],
        "lines": [
            {"id": "l01", "from": "b0", "to": "b1", "r_pu": 0.01,
             "rating_kva": 100.0, "length_mi": 1.0},
            {"id": "l12", "from": "b1", "to": "b2", "r_pu": 0.01,
             "rating_kva": 100.0, "length_mi": 1.0},
            *extra_lines,
        ],
    }
    path.write_text(json.dumps(net))
    return path


class TestLoadNetwork:
    def test_minimal_chain(self, tmp_path):
        net = io.load_network(write_chain_network(tmp_path / "n.json"))
        assert len(net.buses) == 3
        assert net.pcc == "b0"
        assert [l.id for l in net.existing_lines] == ["l01", "l12"]

    def test_cycle_in_existing_grid_rejected(self, tmp_path):
        cycle = {"id": "l20", "from": "b2", "to": "b0", "r_pu": 0.01,
                 "rating_kva": 100.0, "length_mi": 1.0}
        with pytest.raises(ParseError, match="not radial"):
            io.load_network(write_chain_network(tmp_path / "n.json", (cycle,)))

    def test_authored_37_bus_fixture(self):
        # counts match the committed fixture file
        net = io.load_network(DATA / "feeder37.json")
        assert len(net.buses) == 37
        assert len(net.existing_lines) == 36
        assert len(net.candidate_lines) == 3

    def test_parse_error_names_field(self, tmp_path):
        path = tmp_path / "n.json"
        path.write_text(json.dumps({"pcc": "b0", "buses": [{"id": "b0"}],
                                    "lines": [{"id": "l", "from": "b0"}]}))
        with pytest.raises(ParseError, match="'to'"):
            io.load_network(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "n.json"
        path.write_text("{\n  broken")
        with pytest.raises(ParseError, match="line 2"):
            io.load_network(path)


class TestSeries:
    def _write_series(self, path, n_days=12):
        rows = ["day,hour,dem_b1,rg_b1"]
        for d in range(n_days):
            for h in range(HOURS):
                rows.append(f"{d},{h},{10 + (d % 4)},{0.5}")
        path.write_text("\n".join(rows))
        return path

    def test_roundtrip_shapes(self, tmp_path):
        demand, rg = io.load_series(self._write_series(tmp_path / "s.csv"))
        assert demand["b1"].shape == (12, HOURS)
        assert rg["b1"].shape == (12, HOURS)

    def test_missing_hours_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        rows = ["day,hour,dem_b1"] + [f"0,{h},1" for h in range(HOURS - 1)]
        path.write_text("\n".join(rows))
        with pytest.raises(ParseError):
            io.load_series(path)

    def test_representative_days_from_series(self, tmp_path):
        demand, rg = io.load_series(self._write_series(tmp_path / "s.csv"))
        days = io.build_representative_days(demand, rg, k=4, seed=0)
        assert len(days) == 4
        assert sum(d.weight for d in days) == pytest.approx(365.0)


class TestScenarioRoundTrip:
    @pytest.mark.parametrize("make", [toys.toy_feeder, toys.chain3,
                                      toys.infeasibility_toy])
    def test_save_load_idempotent(self, tmp_path, make):
        cfg = make()
        path = tmp_path / "scenario.json"
        io.save_scenario(cfg, path)
        reloaded = io.load_scenario(path)
        assert io.scenario_to_dict(reloaded) == io.scenario_to_dict(cfg)
        # a second cycle is byte-identical
        path2 = tmp_path / "again.json"
        io.save_scenario(reloaded, path2)
        assert path.read_text() == path2.read_text()

    def test_scenario_with_external_network_file(self, tmp_path):
        write_chain_network(tmp_path / "net.json")
        scenario = {
            "network": "net.json",
            "representative_days": [{
                "weight": 365.0,
                "demand_kw": {"b1": [5.0] * HOURS, "b2": [5.0] * HOURS},
                "rg_avail_pu": {},
            }],
            "ders": [],
            "tariff": {"import_usd_kwh": 0.15, "export_usd_kwh": 0.07},
            "islanding": {"p_start": 2.283e-4,
                          "gev": {"mu": 3.0, "sigma": 1.5, "xi": 0.0},
                          "horizon_h": 4},
            "reliability": {},
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(scenario))
        cfg = io.load_scenario(path)
        assert cfg.network.pcc == "b0"
        assert cfg.islanding.horizon_h == 4
        assert sum(cfg.islanding.duration_probs) == pytest.approx(1.0, abs=1e-9)

    def test_scenario_requires_days_or_series(self, tmp_path):
        write_chain_network(tmp_path / "net.json")
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "network": "net.json",
            "islanding": {"p_start": 1e-4, "gev": {"mu": 3, "sigma": 1, "xi": 0}},
        }))
        with pytest.raises(ParseError, match="representative_days"):
            io.load_scenario(path)

    def test_stored_occurrence_probability_survives(self, tmp_path):
        cfg = toys.toy_feeder()
        path = tmp_path / "s.json"
        io.save_scenario(cfg, path)
        assert io.load_scenario(path).islanding.p_start == 2.283e-4
