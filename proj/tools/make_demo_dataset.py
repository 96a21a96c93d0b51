"""Regenerates data/replay_demo.csv and its sidecar.

1,000 rows: 80% confident weak scores (g = 0.02 or 0.98), 20% undecided
(g = 0.5). h ~ Bern(g), so g(1 - g) is the exact conditional squared error.
"""
import json
import pathlib

import numpy as np

rng = np.random.default_rng(2024)
n = 1000
undecided = rng.random(n) < 0.2
g = np.where(undecided, 0.5, np.where(rng.random(n) < 0.5, 0.02, 0.98))
h = (rng.random(n) < g).astype(int)

out = pathlib.Path(__file__).resolve().parent.parent / "data"
out.mkdir(exist_ok=True)
with open(out / "replay_demo.csv", "w") as f:
    f.write("x_id,g,h\n")
    for i in range(n):
        f.write(f"item{i:04d},{g[i]:g},{h[i]}\n")
with open(out / "replay_demo.json", "w") as f:
    json.dump({"theta_star": float(h.mean()), "notes": "synthetic demo, h ~ Bern(g)"}, f, indent=2)
    f.write("\n")
