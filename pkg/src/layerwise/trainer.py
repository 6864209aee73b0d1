"""Layerwise training: one decayed gradient step on W, bias reset, ridge on the head.

The first step uses weight decay ``lambda_1 = 1/eta_1``, which cancels the
initial weights exactly, so it is implemented as ``W1 = -eta_1 * grad_W L``.
The head is then a ridge regression on the frozen features
``relu(W1 x + b)``; it can be solved in closed form (default) or by running
the gradient-descent loop literally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .data import Dataset, PreprocessStats, preprocess, sample_dataset
from .errors import DimensionMismatch, NonFinite, NotAtInit, StepSizeTooLarge
from .network import NetworkParams, Predictor, forward, head_features, init_symmetric
from .rng import stream
from .targets import TargetFunction


def default_lambda_grid() -> tuple:
    return (0.0,) + tuple(float(v) for v in np.logspace(-6, 2, 13))


def theory_eta1(n: int, m: int, d: int) -> float:
    """``sqrt(d) / max(1, ln(n m d))^{3/2}``: the log-damped scale from the analysis."""
    return math.sqrt(d) / max(1.0, math.log(n * m * d)) ** 1.5


def default_eta1(n: int, m: int, d: int) -> float:
    """``sqrt(d) / 2``.

    Puts ``w_j^{(1)} . x`` at order one, the scale of the N(0, 1) biases. The
    log-damped :func:`theory_eta1` shrinks the features by roughly 10x at
    d=10 and costs about 3x in excess risk at n = d^3.
    """
    return math.sqrt(d) / 2.0


@dataclass(frozen=True)
class TrainConfig:
    eta1: float | None = None  # None: default_eta1(n, m, d)
    eta: float | None = None  # None: 1 / (smoothness constant) of the head loss
    lambda_grid: tuple = field(default_factory=default_lambda_grid)
    T: int = 200_000
    tol: float = 1e-12
    holdout_n: int | None = None  # None: min(10**5, 10 n)
    use_gd: bool = False
    resample_stage2: bool = False

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise ValueError("lambda_grid must be nonempty")
        if any(v < 0 for v in grid):
            raise ValueError("lambda_grid values must be nonnegative")
        object.__setattr__(self, "lambda_grid", tuple(sorted(grid)))
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.eta1 is not None and self.eta1 <= 0:
            raise ValueError("eta1 must be positive")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")

    def resolved_eta1(self, n: int, m: int, d: int) -> float:
        return default_eta1(n, m, d) if self.eta1 is None else float(self.eta1)

    def resolved_holdout(self, n: int) -> int:
        return min(10**5, 10 * n) if self.holdout_n is None else int(self.holdout_n)


# -- first layer --------------------------------------------------------------

def empirical_loss(params: NetworkParams, X, y) -> float:
    r = forward(params, X) - y
    return float(np.mean(r * r))


def grad_W(params: NetworkParams, X, y) -> np.ndarray:
    """Gradient of ``(1/n) sum (f(x_i) - y_i)^2`` with respect to ``W``."""
    X = np.asarray(X, dtype=float)
    pre = X @ params.W.T + params.b
    resid = forward(params, X) - y
    act = (pre >= 0).astype(float)
    return (2.0 / X.shape[0]) * params.a[:, None] * ((act * resid[:, None]).T @ X)


def g_n(w, ds: Dataset, stats: PreprocessStats) -> np.ndarray:
    """``(1/n) sum_i yc_i x_i 1{w . x_i >= 0}`` for a single direction ``w``."""
    w = np.asarray(w, dtype=float)
    mask = ds.X @ w >= 0
    # rows summed in sample order (not BLAS), so it agrees bit for bit with a plain loop
    return np.sum(ds.X * (stats.y_centered * mask)[:, None], axis=0) / ds.n


def g_n_matrix(W, X, y_centered) -> np.ndarray:
    """Row ``j`` is ``g_n(w_j)``."""
    mask = (X @ np.asarray(W).T >= 0).astype(float)
    return (mask * y_centered[:, None]).T @ X / X.shape[0]


def _probe_points(d: int) -> np.ndarray:
    return stream(0, "probe").standard_normal((16, d))


def first_layer_step(params: NetworkParams, ds: Dataset, stats: PreprocessStats, eta1: float) -> np.ndarray:
    """``W1 = -eta1 grad_W L(theta_0)`` with labels replaced by the centred ones.

    At a mirrored init the network output is zero, so row ``j`` equals
    ``2 eta1 a_j g_n(w_j)``.
    """
    if ds.d != params.d:
        raise DimensionMismatch("dataset and network dimensions differ")
    probe = np.vstack([_probe_points(params.d), ds.X[: min(ds.n, 16)]])
    if np.any(forward(params, probe) != 0.0):
        raise NotAtInit("network output is not identically zero")
    return 2.0 * eta1 * params.a[:, None] * g_n_matrix(params.W, ds.X, stats.y_centered)


def reinit_biases(params: NetworkParams, seed: int) -> np.ndarray:
    return stream(seed, "bias").standard_normal(params.m)


# -- head ---------------------------------------------------------------------

def ridge_closed_form(Phi, yhat, lam: float) -> np.ndarray:
    """Minimiser of ``(1/n)||Phi a - yhat||^2 + lam ||a||^2``.

    ``lam = 0`` falls back to the minimum-norm least-squares solution when the
    normal matrix is singular.
    """
    Phi = np.asarray(Phi, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    n, m = Phi.shape
    G = Phi.T @ Phi / n
    c = Phi.T @ yhat / n
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam > 0:
        return scipy.linalg.solve(G + lam * np.eye(m), c, assume_a="pos")
    return np.linalg.lstsq(Phi, yhat, rcond=None)[0]


def ridge_path(Phi, yhat, lambdas) -> np.ndarray:
    """Ridge solutions for every lambda (columns), sharing one eigendecomposition."""
    Phi = np.asarray(Phi, dtype=float)
    n, m = Phi.shape
    if m > n:
        return _ridge_path_svd(Phi, np.asarray(yhat, dtype=float), lambdas)
    G = Phi.T @ Phi / n
    c = Phi.T @ np.asarray(yhat, dtype=float) / n
    s, V = np.linalg.eigh(G)
    s = np.clip(s, 0.0, None)
    cv = V.T @ c
    thr = max(s.max(initial=0.0), 1e-300) * m * np.finfo(float).eps
    out = np.empty((m, len(lambdas)))
    for i, lam in enumerate(lambdas):
        if lam > 0:
            inv = 1.0 / (s + lam)
        else:
            inv = np.where(s > thr, 1.0 / np.where(s > thr, s, 1.0), 0.0)
        out[:, i] = V @ (inv * cv)
    return out


def _ridge_path_svd(Phi, yhat, lambdas) -> np.ndarray:
    # wide Phi (more features than rows): thin SVD costs O(n^2 m) instead of O(m^3)
    n, m = Phi.shape
    U, sv, Vt = scipy.linalg.svd(Phi, full_matrices=False)
    uy = U.T @ yhat
    thr = max(sv.max(initial=0.0), 1e-300) * max(n, m) * np.finfo(float).eps
    out = np.empty((m, len(lambdas)))
    for i, lam in enumerate(lambdas):
        if lam > 0:
            scale = sv / (sv * sv + n * lam)
        else:
            scale = np.where(sv > thr, 1.0 / np.where(sv > thr, sv, 1.0), 0.0)
        out[:, i] = Vt.T @ (scale * uy)
    return out


def head_step_bound(Phi, lam: float) -> float:
    """Smoothness constant ``2 lambda_max(Phi^T Phi)/n + 2 lam`` of the head loss."""
    Phi = np.asarray(Phi, dtype=float)
    top = scipy.linalg.eigvalsh(Phi.T @ Phi, subset_by_index=[Phi.shape[1] - 1, Phi.shape[1] - 1])[0]
    return 2.0 * top / Phi.shape[0] + 2.0 * lam


def gd_head(Phi, yhat, a0, eta: float | None, lam: float, T: int, tol: float) -> np.ndarray:
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[0]
    L = head_step_bound(Phi, lam)
    if eta is None:
        eta = 1.0 / L
    if eta * L >= 2.0:
        raise StepSizeTooLarge(f"eta * L = {eta * L:.3g} >= 2")
    G = Phi.T @ Phi / n
    c = Phi.T @ yhat / n
    a = np.array(a0, dtype=float)
    for _ in range(T):
        step = eta * (2.0 * (G @ a - c) + 2.0 * lam * a)
        a -= step
        if not np.all(np.isfinite(a)):
            raise NonFinite("head iterates diverged")
        if np.linalg.norm(step) < tol:
            break
    return a


def train_head_gd(params: NetworkParams, ds: Dataset, stats: PreprocessStats, eta, lam: float,
                  T: int, tol: float) -> np.ndarray:
    """Run ``a <- a - eta [grad_a L + 2 lam a]`` from the current ``a``."""
    Phi = head_features(params, ds.X)
    return gd_head(Phi, stats.y_centered, params.a, eta, lam, T, tol)


def _holdout_risks(A, Phi_hold, resid_hold) -> np.ndarray:
    pred = Phi_hold @ A
    err = pred - resid_hold[:, None]
    return np.mean(err * err, axis=0)


def select_lambda(risks, grid) -> int:
    """Index of the smallest holdout risk; ties go to the larger lambda."""
    risks = np.asarray(risks)
    best = np.min(risks)
    return int(np.flatnonzero(risks == best)[-1])


@dataclass
class TuneResult:
    lam: float
    a: np.ndarray
    risks: np.ndarray = field(repr=False)


def tune_ridge(Phi, yhat, Phi_hold, resid_hold, grid, *, use_gd=False, a0=None, eta=None,
               T=200_000, tol=1e-12) -> TuneResult:
    """Fit the head for every lambda and keep the one with least holdout risk.

    ``resid_hold`` is the holdout label minus the affine part of the predictor.
    """
    grid = tuple(grid)
    if not grid:
        raise ValueError("lambda grid must be nonempty")
    if use_gd:
        a0 = np.zeros(Phi.shape[1]) if a0 is None else a0
        A = np.column_stack([gd_head(Phi, yhat, a0, eta, lam, T, tol) for lam in grid])
    else:
        A = ridge_path(Phi, yhat, grid)
    risks = _holdout_risks(A, Phi_hold, resid_hold)
    i = select_lambda(risks, grid)
    return TuneResult(lam=grid[i], a=A[:, i].copy(), risks=risks)


def tune_lambda(params: NetworkParams, train: Dataset, holdout: Dataset, grid, eta=None, T=200_000,
                tol=1e-12, *, use_gd=False, stats: PreprocessStats | None = None):
    """Returns ``(best_lambda, a)``; risks are on the raw holdout labels."""
    stats = preprocess(train) if stats is None else stats
    Phi = head_features(params, train.X)
    Phi_h = head_features(params, holdout.X)
    resid_h = holdout.y - stats.alpha - holdout.X @ stats.beta
    res = tune_ridge(Phi, stats.y_centered, Phi_h, resid_h, grid, use_gd=use_gd, a0=params.a,
                     eta=eta, T=T, tol=tol)
    return res.lam, res.a


# -- full pipeline --------------------------------------------------------------

def run_algorithm1(f: TargetFunction, n: int, m: int, sigma: float, config: TrainConfig, seed: int,
                   *, train: Dataset | None = None, holdout: Dataset | None = None) -> Predictor:
    """sample -> preprocess -> symmetric init -> first step -> bias reset -> tuned ridge head."""
    train = sample_dataset(f, n, sigma, seed, tag="train") if train is None else train
    n = train.n
    holdout = sample_dataset(f, config.resolved_holdout(n), sigma, seed, tag="holdout") if holdout is None else holdout
    stats = preprocess(train)
    params0 = init_symmetric(m, f.d, seed)
    eta1 = config.resolved_eta1(n, m, f.d)
    W1 = first_layer_step(params0, train, stats, eta1)
    b = reinit_biases(params0, seed)
    params1 = replace(params0, W=W1, b=b)

    head_ds, head_stats = train, stats
    if config.resample_stage2:
        head_ds = sample_dataset(f, n, sigma, seed, tag="stage2")
        head_stats = preprocess(head_ds)

    lam, a = tune_lambda(params1, head_ds, holdout, config.lambda_grid, config.eta, config.T, config.tol,
                         use_gd=config.use_gd, stats=head_stats)
    params = replace(params1, a=a)
    return Predictor(params=params, alpha=head_stats.alpha, beta=np.array(head_stats.beta), lam=lam,
                     info={"eta1": eta1, "W0": params0.W, "a0": params0.a})


def retrain_head_transfer(pretrained: Predictor, target: Dataset, grid, eta=None, T=200_000, tol=1e-12,
                          *, holdout: Dataset, use_gd: bool = False, affine: bool = True) -> Predictor:
    """Freeze ``W1`` and ``b``; refit the affine part and the head on ``target``.

    With ``affine=False`` the affine part is dropped and only the head is fit
    on the raw labels.
    """
    if target.d != pretrained.d:
        raise DimensionMismatch(f"pretrained d={pretrained.d}, target d={target.d}")
    params = pretrained.params
    if affine:
        stats = preprocess(target)
    else:
        stats = PreprocessStats(alpha=0.0, beta=np.zeros(target.d), y_centered=target.y)
    lam, a = tune_lambda(params, target, holdout, grid, eta, T, tol, use_gd=use_gd, stats=stats)
    return Predictor(params=replace(params, a=a), alpha=stats.alpha, beta=np.array(stats.beta), lam=lam)
