"""Kernel-regime baselines (random features, linearised NTK) and risk evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, preprocess, sample_dataset
from .errors import OddWidth
from .network import NetworkParams, Predictor, head_features, init_symmetric
from .targets import TargetFunction, eval_target
from .trainer import default_lambda_grid, reinit_biases, tune_ridge


@dataclass(frozen=True)
class RiskReport:
    l2_excess: float
    l1_excess: float
    n_test: int
    stderr_l2: float
    stderr_l1: float = float("nan")


def evaluate(pred, f: TargetFunction, n_test: int, sigma: float, seed: int, chunk: int = 20000) -> RiskReport:
    """Excess risks of ``pred`` on a fresh test draw.

    ``l2_excess = mean (pred - f)^2`` and ``l1_excess = mean |pred - y| - sigma``.
    """
    if n_test < 1:
        raise ValueError("n_test must be at least 1")
    test = sample_dataset(f, n_test, sigma, seed, tag="test")
    sq = np.empty(n_test)
    ab = np.empty(n_test)
    for s in range(0, n_test, chunk):
        X = test.X[s : s + chunk]
        p = np.asarray(pred.predict(X))
        sq[s : s + chunk] = (p - eval_target(f, X)) ** 2
        ab[s : s + chunk] = np.abs(p - test.y[s : s + chunk])
    se2 = float(sq.std(ddof=1) / math.sqrt(n_test)) if n_test > 1 else float("inf")
    se1 = float(ab.std(ddof=1) / math.sqrt(n_test)) if n_test > 1 else float("inf")
    return RiskReport(l2_excess=float(sq.mean()), l1_excess=float(ab.mean() - sigma), n_test=n_test,
                      stderr_l2=se2, stderr_l1=se1)


def _fit_head(params: NetworkParams, features, train: Dataset, holdout: Dataset, grid):
    stats = preprocess(train)
    Phi = features(params, train.X)
    Phi_h = features(params, holdout.X)
    resid_h = holdout.y - stats.alpha - holdout.X @ stats.beta
    res = tune_ridge(Phi, stats.y_centered, Phi_h, resid_h, grid)
    return stats, res


def _datasets(f, n, sigma, seed, holdout_n):
    train = sample_dataset(f, n, sigma, seed, tag="train")
    holdout_n = min(10**5, 10 * n) if holdout_n is None else holdout_n
    holdout = sample_dataset(f, holdout_n, sigma, seed, tag="holdout")
    return train, holdout


def _baseline_params(m: int, d: int, seed: int) -> NetworkParams:
    if m % 2:
        raise OddWidth(f"width must be even, got {m}")
    p0 = init_symmetric(m, d, seed)
    return replace(p0, b=reinit_biases(p0, seed))


def random_features_fit(f: TargetFunction, n: int, m: int, sigma: float, grid=None, seed: int = 0,
                        *, holdout_n: int | None = None) -> Predictor:
    """Frozen first layer ``w_j ~ N(0, I/d)``, biases ``N(0, 1)``, ridge head."""
    grid = default_lambda_grid() if grid is None else tuple(sorted(grid))
    train, holdout = _datasets(f, n, sigma, seed, holdout_n)
    params = _baseline_params(m, f.d, seed)
    stats, res = _fit_head(params, head_features, train, holdout, grid)
    return Predictor(params=replace(params, a=res.a), alpha=stats.alpha, beta=np.array(stats.beta), lam=res.lam)


def ntk_features(params: NetworkParams, X) -> np.ndarray:
    """Gradient of ``f_theta(x)`` w.r.t. ``(a, W, b)``, flattened per example.

    Column blocks: ``[relu(w_j.x + b_j)]_j``, ``[a_j x 1{w_j.x + b_j >= 0}]_j``
    (``m*d`` columns, neuron-major), ``[a_j 1{w_j.x + b_j >= 0}]_j``.
    """
    X = np.asarray(X, dtype=float)
    pre = X @ params.W.T + params.b
    act = np.maximum(pre, 0.0)
    ind = (pre >= 0).astype(float) * params.a
    n = X.shape[0]
    gW = (ind[:, :, None] * X[:, None, :]).reshape(n, -1)
    return np.concatenate([act, gW, ind], axis=1)


def ntk_gram(params: NetworkParams, X1, X2) -> np.ndarray:
    """Empirical NTK ``<grad f(x), grad f(x')>`` computed without forming features."""
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    p1 = X1 @ params.W.T + params.b
    p2 = X2 @ params.W.T + params.b
    a2 = params.a**2
    i1 = (p1 >= 0).astype(float)
    i2 = (p2 >= 0).astype(float)
    K = np.maximum(p1, 0.0) @ np.maximum(p2, 0.0).T
    K += ((i1 * a2) @ i2.T) * (X1 @ X2.T + 1.0)
    return K


@dataclass(frozen=True)
class LinearizedPredictor:
    """``x -> alpha + beta . x + <ntk_features(x), coef>``."""

    params: NetworkParams
    coef: np.ndarray
    alpha: float
    beta: np.ndarray
    lam: float | None = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.params.d

    def predict(self, X, chunk: int = 5000):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(self.predict(X[None, :])[0])
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], chunk):
            xs = X[s : s + chunk]
            out[s : s + chunk] = self.alpha + xs @ self.beta + ntk_features(self.params, xs) @ self.coef
        return out

    __call__ = predict


def ntk_linearized_fit(f: TargetFunction, n: int, m: int, sigma: float, grid=None, seed: int = 0,
                       *, holdout_n: int | None = None) -> LinearizedPredictor:
    """Ridge on the parameter gradients at (mirrored init, reset biases)."""
    grid = default_lambda_grid() if grid is None else tuple(sorted(grid))
    train, holdout = _datasets(f, n, sigma, seed, holdout_n)
    params = _baseline_params(m, f.d, seed)
    stats, res = _fit_head(params, ntk_features, train, holdout, grid)
    return LinearizedPredictor(params=params, coef=res.a, alpha=stats.alpha, beta=np.array(stats.beta),
                               lam=res.lam)
