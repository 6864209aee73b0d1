# %% [markdown]
# The population first-step gradient g(w) against its Hermite series, and
# how far it sits from the leading Hessian term H w / sqrt(2 pi) as d grows.

# %%
import numpy as np

from layerwise import diagnostics, targets
from layerwise.rng import stream

f = targets.experiment_target(20)
w = diagnostics.random_unit(20, stream(0, "demo"))
est, se = diagnostics.estimate_population_g(f, w, 2**17, seed=0)
series = diagnostics.gradient_series(f, w)
print("max |est - series| / se:", float(np.max(np.abs(est - series) / se)))

# %%
rows = diagnostics.residual_scaling_study(lambda d: targets.experiment_target(d), [25, 50, 100],
                                          n_mc=2**18, trials=10, seed=0)
for r in rows:
    print(f"d={r['d']:4d}  residual {r['residual']:.2e}  (1/d = {r['reference_1_over_d']:.2e})")

# %% [markdown]
# The v_k weights turn random ReLU features into exact monomials in
# expectation. A Monte Carlo check:

# %%
xs = np.linspace(-1, 1, 5)
for k in range(5):
    m, s = diagnostics.vk_identity_mc(k, xs, 200_000, seed=k)
    print(k, np.round(m - xs**k, 3), "stderr", np.round(s, 3))
