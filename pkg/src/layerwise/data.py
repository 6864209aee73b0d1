"""Gaussian inputs, two-point label noise, and the affine preprocessing step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import stream
from .targets import TargetFunction, eval_target


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    sigma_noise: float
    seed: int

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class PreprocessStats:
    alpha: float
    beta: np.ndarray
    y_centered: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def sample_dataset(f: TargetFunction, n: int, sigma: float, seed: int, tag="data") -> Dataset:
    """Draw ``n`` points ``x ~ N(0, I_d)`` with ``y = f(x) + sigma * Rademacher``.

    ``tag`` selects an independent stream for the same ``seed`` (train, holdout,
    test, ...).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = stream(seed, "dataset", tag)
    X = rng.standard_normal((n, f.d))
    signs = rng.integers(0, 2, size=n) * 2 - 1
    y = eval_target(f, X) + sigma * signs
    return Dataset(X=_frozen(X), y=_frozen(np.asarray(y, dtype=float)), sigma_noise=float(sigma), seed=int(seed))


def preprocess(ds: Dataset) -> PreprocessStats:
    n = ds.n
    alpha = float(ds.y.sum() / n)
    beta = ds.X.T @ ds.y / n
    yc = ds.y - alpha - ds.X @ beta
    return PreprocessStats(alpha=alpha, beta=_frozen(beta), y_centered=_frozen(yc))


# Debug dump format: a CSV whose first line is
#   # n=<n>,d=<d>,sigma=<sigma>,seed=<seed>
# followed by a header row x0,...,x{d-1},y and one row per sample, floats in
# repr() form so that load(dump(ds)) is bit-exact.

def dump_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={ds.n},d={ds.d},sigma={ds.sigma_noise!r},seed={ds.seed}\n")
        fh.write(",".join([f"x{i}" for i in range(ds.d)] + ["y"]) + "\n")
        for xi, yi in zip(ds.X, ds.y):
            fh.write(",".join(repr(float(v)) for v in xi) + f",{float(yi)!r}\n")


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        meta_line = fh.readline()
        fh.readline()
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    meta = dict(kv.split("=") for kv in meta_line.lstrip("# ").strip().split(","))
    n, d = int(meta["n"]), int(meta["d"])
    rows = rows.reshape(n, d + 1)
    return Dataset(
        X=_frozen(np.ascontiguousarray(rows[:, :d])),
        y=_frozen(np.ascontiguousarray(rows[:, d])),
        sigma_noise=float(meta["sigma"]),
        seed=int(meta["seed"]),
    )
