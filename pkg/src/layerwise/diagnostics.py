"""Checks on what the first gradient step learns.

The population feature map is ``g(w) = E[fc(x) x 1{w.x >= 0}]`` where ``fc``
is the target with its exact constant and linear Hermite parts removed. Its
Hermite series starts with ``H w / sqrt(2 pi)``; everything else is
``O(1/d)`` for a random unit ``w``. This module estimates ``g`` by Monte Carlo,
evaluates the series in closed form, measures how the learned first layer
aligns with the principal subspace, and hosts the univariate random-feature
weights and the Rademacher bound calculators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import DomainError, InsufficientPrecision, ZeroMatrix
from .hermite import SQRT_2PI, relu_hermite_coeff
from .network import relu
from .rng import stream
from .targets import TargetFunction, ck_contract, ck_full_contract, eval_target, expected_hessian


# -- population feature map -------------------------------------------------------

def centered_target(f: TargetFunction):
    """``x -> f(x) - C_0 - C_1 . x`` using the exact Hermite coefficients."""
    c0 = sum(g.coeff(0) for g in f.components)
    c1 = sum(g.coeff(1) * f.U[t] for t, g in enumerate(f.components))

    def fc(X):
        return eval_target(f, X) - c0 - np.asarray(X) @ c1

    return fc


def _check_unit(w):
    w = np.asarray(w, dtype=float)
    if abs(np.linalg.norm(w) - 1.0) > 1e-8:
        raise ValueError("w must be a unit vector")
    return w


def _plain_mc(f, w, n_mc, rng, chunk=50_000):
    fc = centered_target(f)
    s1 = np.zeros(f.d)
    s2 = np.zeros(f.d)
    for start in range(0, n_mc, chunk):
        k = min(chunk, n_mc - start)
        X = rng.standard_normal((k, f.d))
        v = (fc(X) * (X @ w >= 0))[:, None] * X
        s1 += v.sum(axis=0)
        s2 += (v * v).sum(axis=0)
    mean = s1 / n_mc
    var = np.maximum(s2 / n_mc - mean**2, 0.0) * n_mc / max(n_mc - 1, 1)
    return mean, np.sqrt(var / n_mc)


def _subspace_basis(f: TargetFunction, w) -> np.ndarray:
    """Orthonormal basis (columns) of span(w, u_1..u_r) with ``w`` first."""
    Q, R = np.linalg.qr(np.column_stack([w, f.U.T]))
    keep = np.abs(np.diag(R)) > 1e-12
    Q = Q[:, keep]
    if Q[:, 0] @ w < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def _projected(f, w, n_mc, rng, qmc: bool, replicates: int = 16):
    # Coordinates of x orthogonal to span(w, U) have mean zero and are
    # independent of fc(x) and of the indicator, so only the projection is
    # sampled. In the basis (w, ...) the indicator is 1{z_0 >= 0}; with qmc the
    # half-space is integrated exactly by drawing z_0 half-normal and weighting
    # by 1/2, which leaves a smooth integrand for the Sobol points.
    Q = _subspace_basis(f, w)
    k = Q.shape[1]
    fc = centered_target(f)
    per = max(2, n_mc // replicates)
    if qmc:
        per = 1 << int(round(math.log2(per)))
    means = np.empty((replicates, k))
    tiny = 2.0**-60
    for r in range(replicates):
        if qmc:
            sob = scipy.stats.qmc.Sobol(k, scramble=True, seed=rng)
            P = np.clip(sob.random_base2(int(math.log2(per))), tiny, 1.0 - 2.0**-53)
            P[:, 0] = 0.5 + 0.5 * P[:, 0]
            Z = scipy.stats.norm.ppf(P)
            weight = 0.5
            X = Z @ Q.T
            means[r] = weight * (fc(X)[:, None] * Z).mean(axis=0)
        else:
            Z = rng.standard_normal((per, k))
            X = Z @ Q.T
            means[r] = ((fc(X) * (Z[:, 0] >= 0))[:, None] * Z).mean(axis=0)
    est = means.mean(axis=0)
    # per-coordinate stderr of Q @ est from the replicate covariance
    cov = np.cov(means.T, ddof=1).reshape(k, k) / replicates
    se = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", Q, cov, Q), 0.0))
    return Q @ est, se


def estimate_population_g(f: TargetFunction, w, n_mc: int, seed: int, method: str = "qmc"):
    """Estimate ``g(w)``; returns ``(estimate, stderr)`` as d-vectors.

    ``method``:
      ``"mc"``        plain Monte Carlo over d-dimensional Gaussians;
      ``"projected"`` Monte Carlo over the span of ``U`` and ``w`` only;
      ``"qmc"``       scrambled Sobol points on that span with the half-space
                      integrated analytically; stderr from 16 independent
                      scramblings.
    """
    w = _check_unit(w)
    rng = stream(seed, "population-g")
    if method == "mc":
        return _plain_mc(f, w, n_mc, rng)
    if method == "projected":
        return _projected(f, w, n_mc, rng, qmc=False)
    if method == "qmc":
        return _projected(f, w, n_mc, rng, qmc=True)
    raise ValueError(f"unknown method {method!r}")


def gradient_series(f: TargetFunction, w) -> np.ndarray:
    """Closed-form Hermite series of ``g(w)`` for unit ``w``.

    ``sum_k c_{k+1} C_{k+1}(w^k)/k! + w sum_k c_{k+2} C_k(w^k)/k!`` with ``c_k``
    the ReLU Hermite coefficients and ``C_0 = C_1 = 0`` after centring. Both
    sums are finite since ``C_k = 0`` above the target degree.
    """
    w = np.asarray(w, dtype=float)
    p = f.degree
    out = np.zeros(f.d)
    for k in range(1, p):
        out += relu_hermite_coeff(k + 1) * ck_contract(f, k + 1, w) / math.factorial(k)
    for k in range(2, p + 1):
        out += w * relu_hermite_coeff(k + 2) * ck_full_contract(f, k, w) / math.factorial(k)
    return out


def leading_term(H, w) -> np.ndarray:
    return np.asarray(H) @ np.asarray(w, dtype=float) / SQRT_2PI


def random_unit(d: int, rng) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def residual_scaling_study(target, dims, n_mc: int, trials: int, seed: int, *, method: str = "qmc",
                           check_precision: bool = True) -> list[dict]:
    """Mean ``||g_hat(w) - H w / sqrt(2 pi)||`` over random unit ``w`` for each ``d``.

    ``target`` is a callable ``d -> TargetFunction``. Rows carry the measured
    residual, its MC noise level, the closed-form series residual and the
    ``1/d`` reference scaled to the first row.
    """
    dims = list(dims)
    if len(dims) < 2:
        raise ValueError("need at least two dimensions")
    # common random numbers: trial t uses the leading d coordinates of one
    # Gaussian vector, so each w is uniform on its sphere but the trials are
    # coupled across d and the residual ratios are far less noisy
    rng = stream(seed, "residual-study")
    Z = rng.standard_normal((trials, max(dims)))
    est_seeds = rng.integers(2**62, size=(trials, len(dims)))
    rows = []
    for j, d in enumerate(dims):
        f = target(d)
        H = expected_hessian(f).H
        res, noise, exact = [], [], []
        for t in range(trials):
            w = Z[t, :d] / np.linalg.norm(Z[t, :d])
            est, se = estimate_population_g(f, w, n_mc, int(est_seeds[t, j]), method=method)
            lead = leading_term(H, w)
            res.append(np.linalg.norm(est - lead))
            noise.append(np.linalg.norm(se))
            exact.append(np.linalg.norm(gradient_series(f, w) - lead))
        rows.append({
            "d": d,
            "residual": float(np.mean(res)),
            "residual_std": float(np.std(res, ddof=1)) if trials > 1 else 0.0,
            "mc_stderr": float(np.mean(noise)),
            "series_residual": float(np.mean(exact)),
        })
        if check_precision and rows[-1]["mc_stderr"] >= 0.5 * rows[-1]["residual"]:
            raise InsufficientPrecision(
                f"d={d}: MC noise {rows[-1]['mc_stderr']:.3g} is not below half the residual "
                f"{rows[-1]['residual']:.3g}; raise n_mc or use method='qmc'")
    ref = rows[0]["residual"] * rows[0]["d"]
    for row in rows:
        row["reference_1_over_d"] = ref / row["d"]
    return rows


# -- alignment after the first step --------------------------------------------------

@dataclass(frozen=True)
class AlignmentReport:
    projection_ratio: float
    latent_rank: int
    per_neuron_cos: np.ndarray


def subspace_alignment(W1, f: TargetFunction) -> AlignmentReport:
    W1 = np.asarray(W1, dtype=float)
    total = float(np.sum(W1 * W1))
    if total == 0.0:
        raise ZeroMatrix("first-layer weights are all zero")
    P = f.U.T @ f.U
    proj = W1 @ P
    ratio = float(np.sum(proj * proj) / total)
    norms = np.linalg.norm(W1, axis=1)
    cos = np.divide(np.linalg.norm(proj, axis=1), norms, out=np.zeros_like(norms), where=norms > 0)
    sv = np.linalg.svd(proj, compute_uv=False)
    rank = int(np.sum(sv >= 1e-8 * sv[0])) if sv[0] > 0 else 0
    return AlignmentReport(projection_ratio=ratio, latent_rank=rank, per_neuron_cos=cos)


# -- univariate random-feature weights ---------------------------------------------

def _normal_pdf(b):
    return np.exp(-0.5 * np.asarray(b, dtype=float) ** 2) / SQRT_2PI


def monomial_weight_v(k: int, a, b, mode: str = "uniform"):
    """Weights with ``E[v_k(a, b) relu(a x + b)] = x^k`` for ``|x| <= 1``.

    ``a`` is uniform on {-1, 1}; ``b`` is uniform on [-1, 1] (``mode="uniform"``)
    or standard normal (``mode="gaussian"``). Vectorised over ``a`` and ``b``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mode == "gaussian":
        inside = np.abs(b) <= 1.0
        bc = np.where(inside, b, 0.0)
        out = np.where(inside, monomial_weight_v(k, a, bc, "uniform") / (2.0 * _normal_pdf(bc)), 0.0)
        return out[()] if out.ndim == 0 else out
    if mode != "uniform":
        raise ValueError(f"unknown mode {mode!r}")
    if np.any(np.abs(b) > 1.0):
        raise DomainError("uniform mode needs |b| <= 1")
    v0 = 6.0 * b
    v1 = 2.0 * a
    if k == 0:
        out = v0 + 0.0 * a
    elif k == 1:
        out = v1 + 0.0 * b
    else:
        # f(x) = x^k: f'' (b) = k(k-1) b^(k-2), f'(1) = k, f(1) = 1
        out = 2.0 * (1.0 - a) * k * (k - 1) * b ** (k - 2) - (k - 1.0) * v0 + k * v1
    return out[()] if np.ndim(out) == 0 else out


def vk_identity_mc(k: int, x, n_draws: int, seed: int, mode: str = "uniform"):
    """Monte Carlo of ``E[v_k(a, b) relu(a x + b)]`` at each point of ``x``.

    Returns ``(estimate, stderr)``. The same draws are reused for every ``x``.
    """
    rng = stream(seed, "vk", k, mode)
    a = (rng.integers(0, 2, size=n_draws) * 2 - 1).astype(float)
    b = rng.uniform(-1.0, 1.0, size=n_draws) if mode == "uniform" else rng.standard_normal(n_draws)
    v = monomial_weight_v(k, a, b, mode)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    est = np.empty(xs.shape)
    se = np.empty(xs.shape)
    for i, xv in enumerate(xs):
        s = v * relu(a * xv + b)
        est[i] = s.mean()
        se[i] = s.std(ddof=1) / math.sqrt(n_draws)
    return est, se


# -- generalisation bound calculators ------------------------------------------------

def rademacher_two_layer(B_a: float, B_w: float, m: int, d: int, n: int) -> float:
    """``2 B_a B_w sqrt(m d / n)``."""
    return 2.0 * B_a * B_w * math.sqrt(m * d / n)


def rademacher_linear(B_a: float, W_frob_sq: float, b_norm_sq: float, n: int) -> float:
    """``sqrt(B_a^2 (||W||_F^2 + ||b||^2) / n)`` for a fixed first layer."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.sqrt(B_a * B_a * (W_frob_sq + b_norm_sq) / n)
