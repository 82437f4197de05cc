"""Sensitivity sweep on the bundled feeder: islanding duration x RG scale.

Writes the installed-capacity table behind a duration/RG sensitivity
figure plus the storage-cost spot check.
"""

import json
from pathlib import Path

from mgdesign import cases, toys

OUT = Path(__file__).resolve().parent.parent / "results"


def main() -> None:
    OUT.mkdir(exist_ok=True)
    cfg = toys.toy_feeder()
    grid = cases.sweep(cfg,
                       durations=(4, 6, 8),
                       rg_scales=(0.5, 1.0, 1.5, 2.0))
    (OUT / "sweep_duration_rg.json").write_text(
        json.dumps(grid, indent=1, sort_keys=True))
    spot = cases.sweep(cfg, storage_cost_scales=(1.0, 0.9, 0.8, 0.7, 0.6))
    (OUT / "sweep_storage_cost.json").write_text(
        json.dumps(spot, indent=1, sort_keys=True))
    print("trends:", grid["trends"])
    for row in grid["rows"]:
        if row["status"] == "ok":
            print(f"duration={row['duration_h']}h rg={row['rg_scale']:>4}: "
                  f"DG {row['dg_kw']:7.1f} kW  storage {row['storage_kwh']:7.1f} kWh")
        else:
            print(f"duration={row['duration_h']}h rg={row['rg_scale']:>4}: "
                  f"FAILED ({row['error']})")
    print("storage-cost spot check:",
          [(r["storage_cost_scale"], round(r.get("dg_kw", -1), 1),
            round(r.get("storage_kwh", -1), 1)) for r in spot["rows"]])


if __name__ == "__main__":
    main()
