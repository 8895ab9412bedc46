"""
A small campaign
================

Every (fleet, family, support, model) cell from one JSON config, with the
vehicle sweeps cached on disk. The second run is served from the cache.
"""

import json
import tempfile
import time
from pathlib import Path

from substructure_ers import default_fleet_spec, run_campaign, synthesize_fleet
from substructure_ers.wim import save_wim

work = Path(tempfile.mkdtemp(prefix="ers-campaign-"))
save_wim(synthesize_fleet(default_fleet_spec(), 1000, seed=5), work / "fleet.csv")
config = {
    "output_dir": "out",
    "cache_dir": "cache",
    "fleets": {"synthetic": "fleet.csv"},
    "models": ["HL-93", "CL-625", "IMT-66.5"],
    "families": {"2": [0, 1], "3": [1, 2]},
}
(work / "campaign.json").write_text(json.dumps(config, indent=2))

for attempt in (1, 2):
    t = time.perf_counter()
    manifest = run_campaign(work / "campaign.json")
    states = [c["state"] for c in manifest["cells"]]
    print(f"run {attempt}: {len(states)} cells, {states.count('cache-hit')} cache hits, "
          f"{time.perf_counter() - t:.2f} s")

print("outputs in", work / "out")
