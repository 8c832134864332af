"""End-to-end artifact pipeline: sweep grid -> CSV -> rendered figures.

Writes a small sweep grid, runs every cell, and (if the companion
`plotkit` package is installed) renders the figure families from the CSV.
Scaled down so it finishes in a couple of minutes; real comparisons use
N=1000 and 2000 events.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="sweepdemo_"))
grid = {
    "protocols": ["arbp", "ibsp", "daibsp"],
    "n_nodes": [200, 400],
    "lambdas": [5.0],
    "alphas": [1.0],
    "betas": [0.0],
    "seeds": [0, 1],
    "base": {"area": 250.0, "total_events": 300},
}
grid_path = work / "grid.json"
grid_path.write_text(json.dumps(grid))
csv_path = work / "sweep.csv"

subprocess.run(
    ["backoffsim", "sweep", "--grid", str(grid_path), "--out", str(csv_path)],
    check=True,
)
print(f"wrote {csv_path}")
print(csv_path.read_text().splitlines()[2])  # header row

try:
    import plotkit  # noqa: F401
except ImportError:
    print("plotkit not installed; skipping figure rendering")
    sys.exit(0)

figs = work / "figs"
subprocess.run(
    ["plots", "--csv", str(csv_path), "--figset", "fig5", "--out", str(figs)],
    check=True,
)
subprocess.run(
    ["plots", "--csv", str(csv_path), "--figset", "fig6", "--out", str(figs)],
    check=True,
)
print(f"figures in {figs}")
