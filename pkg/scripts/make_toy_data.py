"""Write the bundled example inputs under ./data.

Produces the four-bus design scenario, the three-bus reliability
benchmark, a partition spec, and a synthetic full-year series CSV wired
to a clustering-based scenario, so every CLI entry point has a ready
input file.
"""

import dataclasses
import json
from pathlib import Path

import numpy as np

from mgdesign import io, toys
from mgdesign.model import validate_scenario

OUT = Path(__file__).resolve().parent.parent / "data"


def write_year_series(path: Path, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    toy = toys.toy_feeder()
    day = toy.days[0]
    rows = ["day,hour," + ",".join(f"dem_{b}" for b in ("b1", "b2", "b3")) + ",rg_b2"]
    for d in range(365):
        season = 1.0 + 0.15 * np.sin(2 * np.pi * d / 365.0)
        noise = rng.normal(1.0, 0.03, size=3)
        for h in range(24):
            # b2 sits behind its small lateral at the edge of what a daily
            # storage cycle can recharge; only the well-fed buses vary
            dem = [day.p_dmd(b, h) if b == "b2"
                   else day.p_dmd(b, h) * season * noise[i]
                   for i, b in enumerate(("b1", "b2", "b3"))]
            sun = max(0.0, day.avail_pu("b2", h) * (0.8 + 0.4 * rng.random()))
            rows.append(f"{d},{h}," + ",".join(f"{v:.3f}" for v in dem)
                        + f",{sun:.3f}")
    path.write_text("\n".join(rows))


def main() -> None:
    OUT.mkdir(exist_ok=True)
    io.save_scenario(toys.toy_feeder(), OUT / "toy_feeder.json")
    io.save_scenario(toys.chain3(), OUT / "chain3.json")

    write_year_series(OUT / "year_series.csv")
    scenario = io.scenario_to_dict(toys.toy_feeder())
    del scenario["representative_days"]
    scenario["series"] = {"file": "year_series.csv", "cluster_days": 4, "seed": 0}
    (OUT / "toy_feeder_clustered.json").write_text(
        json.dumps(scenario, indent=1, sort_keys=True))

    # partition layout: both halves get a DG site so each can island
    cfg = toys.toy_feeder()
    ders = tuple(dataclasses.replace(s, candidate_buses=("b1", "b3"))
                 if s.kind == "DG" else s for s in cfg.ders)
    io.save_scenario(validate_scenario(dataclasses.replace(cfg, ders=ders)),
                     OUT / "toy_feeder_multi_dg.json")
    (OUT / "partitions.json").write_text(json.dumps({"partitions": [
        {"name": "north", "buses": ["b0", "b1"], "pcc": "b0"},
        {"name": "south", "buses": ["b2", "b3"], "pcc": "b3"},
    ]}, indent=1))
    print(f"wrote example inputs to {OUT}")


if __name__ == "__main__":
    main()
