"""One-time pilot for the residual-scaling acceptance check.

Writes residual_scaling.json next to this file. The acceptance test reads
the frozen band from there instead of re-deriving it from its own run.
"""

import json
import platform
from pathlib import Path

import numpy as np

import layerwise
from layerwise.diagnostics import residual_scaling_study
from layerwise.targets import experiment_target

DIMS = [50, 100, 200]
N_MC = 10**6
TRIALS = 20
PILOT_SEED = 12345  # distinct from the acceptance seed

rows = residual_scaling_study(lambda d: experiment_target(d), DIMS, N_MC, TRIALS, PILOT_SEED)
ratios = [a["residual"] / b["residual"] for a, b in zip(rows, rows[1:])]
doc = {
    "dims": DIMS,
    "n_mc": N_MC,
    "trials": TRIALS,
    "seed": PILOT_SEED,
    "method": "qmc",
    "rows": rows,
    "halving_ratios": ratios,
    # a ratio of 2 "within a factor of 3" is the interval [2/3, 6]
    "ratio_band": [2.0 / 3.0, 6.0],
    "noise_to_residual_max": max(r["mc_stderr"] / r["residual"] for r in rows),
    "package_version": layerwise.__version__,
    "numpy": np.__version__,
    "python": platform.python_version(),
}
out = Path(__file__).with_name("residual_scaling.json")
out.write_text(json.dumps(doc, indent=2) + "\n")
print(json.dumps({"ratios": ratios, "residuals": [r["residual"] for r in rows]}))
