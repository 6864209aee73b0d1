# %% [markdown]
# Feature reuse: pretrain on a degree-4 target, freeze the first layer, and
# refit only the head on a degree-3 target that shares its direction.

# %%
from layerwise.config import ExperimentConfig
from layerwise.harness import run_transfer, summarize

cfg = ExperimentConfig(kind="transfer", seeds=[0, 1, 2], n_test=20_000)
cfg.transfer.pretrain_exponents = [0.0, 2.0, 3.0]
cfg.transfer.N_exponents = [1.0, 2.0, 3.0]

for cell in summarize(run_transfer(cfg)):
    print(f"pretrain n={cell['n']:5d}  N={cell['N']:5d}  l2 {cell['l2_mean']:.3f} +/- {cell['l2_std']:.3f}")

# %% [markdown]
# With n = 1 the frozen features are random and the head cannot fit He_3
# from few samples. Once the pretraining step has found e_1, a handful of
# target samples is enough.
