# %% [markdown]
# Hermite toolkit and additive ridge targets.
#
# ReLU has an explicit probabilist's Hermite expansion. The targets used
# everywhere else are sums of 1-d Hermite polynomials along orthonormal
# directions, and their expected Hessian is known in closed form.

# %%
import numpy as np

from layerwise import hermite, targets

for k in range(9):
    print(f"c_{k} = {hermite.relu_hermite_coeff(k): .6f}")

# Odd coefficients above 1 vanish, so the truncated series only improves on even steps.
for K in (2, 4, 8):
    s = hermite.relu_series(K)
    print(f"K={K}: E[relu^2] - ||S_K||^2 = {0.5 - hermite.series_l2_norm_sq(s):.4f}")

# %% [markdown]
# The experiment target in d = 10 is He_2(x_1)/2 + He_4(x_1)/sqrt(2 * 4!).
# Its expected Hessian is 2 alpha_2 u u^T, so the He_2 part is what makes
# the direction visible to a single gradient step.

# %%
f = targets.experiment_target(10)
summary = targets.expected_hessian(f)
print("rank", summary.rank, "kappa", summary.kappa)
print("top eigenvector", np.round(np.linalg.eigh(summary.H)[1][:, -1], 3))

x = np.random.default_rng(0).standard_normal((5, 10))
print("f(x) =", np.round(targets.eval_target(f, x), 3))
