"""Two-layer ReLU network ``x -> a^T relu(W x + b)`` with mirrored initialisation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, OddWidth
from .rng import stream


def relu(z):
    return np.maximum(z, 0.0)


def relu_grad(z):
    # indicator 1{z >= 0}; the value at exactly 0 is fixed to 1
    return (z >= 0).astype(float)


@dataclass(frozen=True)
class NetworkParams:
    a: np.ndarray
    W: np.ndarray
    b: np.ndarray

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def with_(self, **kw) -> "NetworkParams":
        return replace(self, **{k: np.asarray(v, dtype=float) for k, v in kw.items()})


def init_symmetric(m: int, d: int, seed: int) -> NetworkParams:
    """``a_j ~ {-1, 1}``, ``w_j ~ N(0, I/d)``, ``b = 0``; neuron ``m-1-j`` mirrors ``j``
    with the sign of ``a`` flipped, so the network is identically zero."""
    if m < 2 or m % 2:
        raise OddWidth(f"width must be even and >= 2, got {m}")
    rng = stream(seed, "init")
    h = m // 2
    a_half = (rng.integers(0, 2, size=h) * 2 - 1).astype(float)
    W_half = rng.standard_normal((h, d)) / np.sqrt(d)
    a = np.concatenate([a_half, -a_half[::-1]])
    W = np.concatenate([W_half, W_half[::-1]], axis=0)
    return NetworkParams(a=a, W=W, b=np.zeros(m))


def _check_X(params: NetworkParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != params.d:
        raise DimensionMismatch(f"expected input dim {params.d}, got {X.shape[-1]}")
    return X


def head_features(params: NetworkParams, X) -> np.ndarray:
    """Hidden activations ``Phi[i, j] = relu(w_j . x_i + b_j)``."""
    X = _check_X(params, X)
    return relu(X @ params.W.T + params.b)


def _readout(Phi: np.ndarray, a: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    if m % 2:
        return Phi @ a
    # pair neuron j with its mirror m-1-j before summing; mirrored pairs then
    # cancel exactly instead of up to BLAS summation order
    h = m // 2
    pairs = Phi[..., :h] * a[:h] + Phi[..., : h - 1 : -1] * a[: h - 1 : -1]
    return pairs.sum(axis=-1)


def forward(params: NetworkParams, X):
    X = _check_X(params, X)
    Phi = head_features(params, X)
    out = _readout(Phi, params.a)
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Predictor:
    """``x -> alpha + beta . x + a^T relu(W x + b)``."""

    params: NetworkParams
    alpha: float
    beta: np.ndarray
    lam: float | None = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.params.d

    def predict(self, X, chunk: int = 20000):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(self.alpha + self.beta @ X + forward(self.params, X))
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], chunk):
            xs = X[s : s + chunk]
            out[s : s + chunk] = self.alpha + xs @ self.beta + forward(self.params, xs)
        return out

    __call__ = predict


# Predictor file: numpy .npz archive with arrays
#   m, d (int scalars), a (m,), W (m, d), b (m,), alpha (scalar), beta (d,)
# and optionally lam (scalar, NaN when unset).

def save_predictor(pred: Predictor, path) -> None:
    p = pred.params
    np.savez(
        path,
        m=np.int64(p.m),
        d=np.int64(p.d),
        a=p.a,
        W=p.W,
        b=p.b,
        alpha=np.float64(pred.alpha),
        beta=np.asarray(pred.beta, dtype=float),
        lam=np.float64(np.nan if pred.lam is None else pred.lam),
    )


def load_predictor(path) -> Predictor:
    with np.load(path) as z:
        m, d = int(z["m"]), int(z["d"])
        params = NetworkParams(a=z["a"].copy(), W=z["W"].copy(), b=z["b"].copy())
        if params.W.shape != (m, d):
            raise DimensionMismatch("stored W does not match (m, d)")
        lam = float(z["lam"])
        return Predictor(params=params, alpha=float(z["alpha"]), beta=z["beta"].copy(),
                         lam=None if np.isnan(lam) else lam)
