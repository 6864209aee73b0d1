"""Fast cross-module invariant checks (well under a minute in total).

Each check returns a measured value and a threshold; the report is the list
of :class:`Check` results. Library functions are looked up through their
modules at call time so that a patched function is what gets checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.integrate

from . import csq, diagnostics, hermite, network, targets, trainer
from .data import Dataset, preprocess
from .rng import stream


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: measured={self.value:.3e} threshold={self.threshold:.1e}"


def _phi(z):
    return math.exp(-0.5 * z * z) / hermite.SQRT_2PI


def hermite_orthogonality() -> float:
    z, w = hermite.gauss_hermite(40)
    worst = 0.0
    for j in range(hermite.P_MAX + 1):
        hj = hermite.he_eval(j, z)
        for k in range(hermite.P_MAX + 1):
            inner = float(np.sum(w * hj * hermite.he_eval(k, z)))
            target = math.factorial(k) if j == k else 0.0
            worst = max(worst, abs(inner - target) / math.sqrt(math.factorial(j) * math.factorial(k)))
    return worst


def relu_coefficients() -> float:
    # E[relu(z) He_k(z)] = int_0^inf z He_k(z) phi(z) dz, truncated where phi underflows
    worst = 0.0
    for k in range(hermite.P_MAX + 1):
        ref = scipy.integrate.quad(lambda t: t * float(hermite.he_eval(k, t)) * _phi(t), 0.0, 40.0,
                                   epsabs=1e-13, epsrel=1e-13)[0]
        worst = max(worst, abs(hermite.relu_hermite_coeff(k) - ref))
    return worst


def relu_reconstruction() -> float:
    """Parseval gap: ``E[(relu - S_K)^2]`` against ``1/2 - ||S_K||^2`` for K = 8."""
    s = hermite.relu_series(hermite.P_MAX)

    def sq_err(t):
        return (max(t, 0.0) - float(hermite.series_eval(s, t))) ** 2 * _phi(t)

    err = sum(scipy.integrate.quad(sq_err, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
              for a, b in ((-np.inf, 0.0), (0.0, np.inf)))
    return abs(err - (0.5 - hermite.series_l2_norm_sq(s)))


def basis_roundtrip() -> float:
    worst = 0.0
    for k in range(hermite.P_MAX + 1):
        to_mono = hermite.hermite_to_monomial(k)
        back: dict[int, float] = {}
        for j, c in to_mono.items():
            for i, e in hermite.monomial_to_hermite(j).items():
                back[i] = back.get(i, 0.0) + c * e
        for i in range(k + 1):
            worst = max(worst, abs(back.get(i, 0.0) - (1.0 if i == k else 0.0)))
    return worst


def gaussian_moments() -> float:
    z, w = hermite.gauss_hermite(20)
    worst = 0.0
    for exps in ((2,), (4,), (6,), (2, 2), (4, 2), (1, 1), (3,)):
        grid = np.meshgrid(*([z] * len(exps)), indexing="ij")
        wt = np.ones_like(grid[0])
        val = np.ones_like(grid[0])
        for g, e, W in zip(grid, exps, np.meshgrid(*([w] * len(exps)), indexing="ij")):
            val = val * g**e
            wt = wt * W
        worst = max(worst, abs(float(np.sum(wt * val)) - hermite.gaussian_monomial_moment(exps)))
    return worst


def hessian_identity() -> float:
    f = targets.experiment_target(10)
    H = targets.expected_hessian(f).H
    z, w = hermite.gauss_hermite(20)
    g2 = hermite.series_derivative(hermite.series_derivative(f.components[0]))
    want = float(np.sum(w * hermite.series_eval(g2, z))) * np.outer(f.U[0], f.U[0])
    return float(np.max(np.abs(H - want)))


def symmetric_init() -> float:
    params = network.init_symmetric(100, 10, 0)
    X = stream(0, "validate", "init").standard_normal((500, 10))
    return float(np.max(np.abs(network.forward(params, X))))


def first_step_finite_difference() -> float:
    d, n, m, h, eta1 = 5, 50, 4, 1e-4, 0.7
    f = targets.experiment_target(d)
    rng = stream(0, "validate", "fd")
    X = rng.standard_normal((n, d))
    ds = Dataset(X=X, y=targets.eval_target(f, X) + rng.choice([-1.0, 1.0], n), sigma_noise=1.0, seed=0)
    stats = preprocess(ds)
    params = network.init_symmetric(m, d, 1)
    W1 = trainer.first_layer_step(params, ds, stats, eta1)
    num = np.zeros_like(params.W)
    for idx in np.ndindex(*params.W.shape):
        up = params.W.copy()
        dn = params.W.copy()
        up[idx] += h
        dn[idx] -= h
        num[idx] = (trainer.empirical_loss(replace(params, W=up), X, stats.y_centered)
                    - trainer.empirical_loss(replace(params, W=dn), X, stats.y_centered)) / (2 * h)
    return float(np.linalg.norm(W1 + eta1 * num) / np.linalg.norm(W1))


def gd_matches_ridge() -> float:
    worst = 0.0
    for i in range(5):
        rng = stream(0, "validate", "ridge", i)
        Phi = rng.standard_normal((40, 8))
        y = rng.standard_normal(40)
        lam = 10.0 ** rng.uniform(-3, 0)
        ref = trainer.ridge_closed_form(Phi, y, lam)
        a = trainer.gd_head(Phi, y, np.zeros(8), None, lam, 100_000, 1e-14)
        worst = max(worst, float(np.linalg.norm(a - ref) / np.linalg.norm(ref)))
    return worst


def population_gradient() -> float:
    """Worst |estimate - series| in units of the reported standard error."""
    f = targets.experiment_target(10)
    rng = stream(0, "validate", "g")
    worst = 0.0
    for t in range(3):
        w = diagnostics.random_unit(10, rng)
        est, se = diagnostics.estimate_population_g(f, w, 2**15, t)
        worst = max(worst, float(np.max(np.abs(est - diagnostics.gradient_series(f, w)) / np.maximum(se, 1e-12))))
    return worst


def vk_identity() -> float:
    xs = np.linspace(-1.0, 1.0, 11)
    worst = 0.0
    for mode in ("uniform", "gaussian"):
        for k in range(5):
            est, se = diagnostics.vk_identity_mc(k, xs, 200_000, k, mode)
            worst = max(worst, float(np.max(np.abs(est - xs**k) / se)))
    return worst


def csq_certificate() -> float:
    cls = csq.build_quasi_orthogonal_set(50, 20, 0.5, 0)
    V = cls.directions
    brute = max(abs(float(V[i] @ V[j])) for i in range(cls.M) for j in range(cls.M) if i != j)
    return abs(brute - cls.epsilon_cert) + max(0.0, cls.epsilon_cert - 0.5)


def correlation_quadrature() -> float:
    z, w = hermite.gauss_hermite(30)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    Wt = np.outer(w, w)
    rng = stream(0, "validate", "corr")
    worst = 0.0
    for p in (2, 3, 4):
        u = diagnostics.random_unit(2, rng)
        v = diagnostics.random_unit(2, rng)
        fu = hermite.he_eval(p, u[0] * Z1 + u[1] * Z2)
        fv = hermite.he_eval(p, v[0] * Z1 + v[1] * Z2)
        quad = float(np.sum(Wt * fu * fv)) / math.factorial(p)
        worst = max(worst, abs(quad - csq.pairwise_correlation(u, v, p)))
    return worst


CHECKS = (
    ("hermite_orthogonality", hermite_orthogonality, 1e-8),
    ("relu_coefficients_vs_quadrature", relu_coefficients, 1e-8),
    ("relu_reconstruction_parseval", relu_reconstruction, 1e-8),
    ("monomial_hermite_roundtrip", basis_roundtrip, 1e-10),
    ("gaussian_monomial_moments", gaussian_moments, 1e-9),
    ("expected_hessian_vs_quadrature", hessian_identity, 1e-10),
    ("symmetric_init_output_zero", symmetric_init, 0.0),
    ("first_step_vs_finite_differences", first_step_finite_difference, 1e-4),
    ("gd_head_vs_closed_form", gd_matches_ridge, 1e-6),
    ("population_gradient_vs_series_z", population_gradient, 5.0),
    ("vk_identity_max_z", vk_identity, 4.5),
    ("csq_certificate_sound", csq_certificate, 1e-12),
    ("pairwise_correlation_vs_quadrature", correlation_quadrature, 1e-6),
)


def run_validate() -> list[Check]:
    out = []
    for name, fn, thr in CHECKS:
        try:
            val = float(fn())
            ok = bool(val <= thr)
        except Exception:  # a crashing check is a failed check
            val, ok = math.nan, False
        out.append(Check(name, val, thr, ok))
    return out
