"""Regenerate the bundled nondominated set of the nominal PPA surface.

Enumerates the default tool-parameter space on a fixed grid (5 points per
continuous dimension, integers enumerated exactly), evaluates the
noise-free surface, filters to the nondominated subset, and writes the
result to src/dseopt/data/ppa_front.json. Rerun after any change to the
surface formula.
"""

import json
from pathlib import Path

from dseopt.evaluators import ppa_nominal
from dseopt.objective import pareto_filter
from dseopt.param_space import default_cad_space

GRID_POINTS_PER_DIM = 5


def main() -> None:
    space = default_cad_space()
    grid = space.grid(GRID_POINTS_PER_DIM)
    points = []
    for v in grid:
        raw = space.decode(v)
        points.append((raw, ppa_nominal(raw)))
    front = pareto_filter(points)
    payload = {
        "points_per_dim": GRID_POINTS_PER_DIM,
        "grid_size": len(points),
        "front": [{"params": raw, "metrics": metrics} for raw, metrics in front],
    }
    out = Path(__file__).resolve().parents[1] / "src" / "dseopt" / "data" / "ppa_front.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"wrote {len(front)} nondominated points (of {len(points)}) to {out}")


if __name__ == "__main__":
    main()
