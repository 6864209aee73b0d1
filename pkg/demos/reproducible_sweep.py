# %% [markdown]
# A small sweep through the harness, the same code path as
# `layerwise sweep`. Cells are seeded from (master seed, n, seed index), so
# rerunning or changing the worker count yields the same CSV.

# %%
import tempfile
from pathlib import Path

from layerwise.config import ExperimentConfig
from layerwise.harness import read_records, run_sweep, summarize

out = Path(tempfile.mkdtemp()) / "sweep.csv"
cfg = ExperimentConfig(kind="sweep", seeds=[0, 1], n_exponents=[1.0, 2.0, 3.0], n_test=10_000, out=str(out))
run_sweep(cfg)

print(out.read_text().splitlines()[0])
for cell in summarize(read_records(out)):
    print(f"{cell['method']:<10} n={cell['n']:5d}  {cell['l2_mean']:.3f} +/- {cell['l2_std']:.3f}")
print(out.with_suffix(".summary.json").read_text()[:300])
