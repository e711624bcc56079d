#!/usr/bin/env python3
"""Regenerate the frontend golden fixtures from the demo scenarios.

Writes one representative frame per scenario plus the matching map
documents into frontend/tests/fixtures/. Run from the repo root after
engine changes, then re-run the frontend tests.
"""

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from risknav import demo, sim  # noqa: E402
from risknav.hmi import frame_to_dict  # noqa: E402
from risknav.mapdoc import map_document  # noqa: E402

FIXTURES = REPO / "frontend" / "tests" / "fixtures"

# scenario name -> (osm file, aug file, tick of interest)
PICKS = {
    "collision": ("crossing.osm", "demo.aug.yaml", 20),  # 3 s before the encounter
    "turn": ("turn.osm", "demo.aug.yaml", 0),            # red scale, turn popup
    "crosswalk": ("crosswalk.osm", "crosswalk.aug.yaml", 50),  # yellow scale at 90 m
}


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        demo.write_all(tmp)
        for name, (_osm, _aug, tick) in PICKS.items():
            simulation = sim.load(Path(tmp) / f"{name}.scenario.json")
            result = None
            for _ in range(tick + 1):
                result = simulation.step()
            frame = frame_to_dict(result.frame)
            (FIXTURES / f"{name}.frame.json").write_text(json.dumps(frame, indent=1))
            doc = map_document(simulation.graph)
            (FIXTURES / f"{name}.map.json").write_text(json.dumps(doc))
            print(f"{name}: frame t={frame['t']} with {len(frame['popups'])} popups, "
                  f"map {len(doc['nodes'])} nodes")


if __name__ == "__main__":
    main()
