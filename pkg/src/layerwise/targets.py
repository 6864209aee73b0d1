"""Low-index polynomial targets ``f(x) = sum_t g_t(u_t . x)``.

Directions are orthonormal rows of ``U``; each ``g_t`` is a univariate
:class:`~layerwise.hermite.HermiteSeries`. With orthonormal directions the
Hermite tensors are diagonal in the ``u_t``, which gives closed forms for the
normalisation, the expected Hessian and every ``C_k = E[grad^k f]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonOrthonormalDirections, ZeroFunction
from .hermite import HermiteSeries, series_eval, series_l2_norm_sq

ORTHO_TOL = 1e-10
RANK_TOL = 1e-10


@dataclass(frozen=True)
class TargetFunction:
    U: np.ndarray
    components: tuple

    @property
    def r(self) -> int:
        return self.U.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def degree(self) -> int:
        return max(g.degree for g in self.components)

    def __call__(self, X):
        return eval_target(self, X)


@dataclass(frozen=True)
class HessianSummary:
    H: np.ndarray
    rank: int
    kappa: float
    principal_basis: np.ndarray


def make_target(U, components: Sequence[HermiteSeries], tol: float = ORTHO_TOL) -> TargetFunction:
    """Build a target and rescale all components jointly so ``E[f^2] = 1``."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    r, d = U.shape
    if r > d:
        raise NonOrthonormalDirections(f"r={r} exceeds d={d}")
    if len(components) != r:
        raise DimensionMismatch(f"{len(components)} components for {r} directions")
    if np.max(np.abs(U @ U.T - np.eye(r))) > tol:
        raise NonOrthonormalDirections("rows of U must be orthonormal")
    total = sum(series_l2_norm_sq(g) for g in components)
    if total == 0.0:
        raise ZeroFunction("all components vanish")
    scale = 1.0 / math.sqrt(total)
    if abs(scale - 1.0) < 1e-15:
        comps = tuple(components)
    else:
        comps = tuple(g.scaled(scale) for g in components)
    U = U.copy()
    U.setflags(write=False)
    return TargetFunction(U=U, components=comps)


def _as_rows(f: TargetFunction, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != f.d:
        raise DimensionMismatch(f"expected last axis {f.d}, got {x.shape[-1]}")
    return x


def latent_projection(f: TargetFunction, x):
    """``U x`` (works on a single point or on rows of a matrix)."""
    x = _as_rows(f, x)
    return x @ f.U.T


def eval_target(f: TargetFunction, x):
    z = latent_projection(f, x)
    out = 0.0
    for t, g in enumerate(f.components):
        out = out + series_eval(g, z[..., t])
    return out


def ck_coefficient(f: TargetFunction, k: int) -> list[tuple[float, int]]:
    """Factored ``C_k = sum_t scale_t u_t^{(x)k}`` as ``[(scale_t, t), ...]``.

    Only nonzero scales are listed.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = []
    for t, g in enumerate(f.components):
        s = math.factorial(k) * g.coeff(k)
        if s != 0.0:
            out.append((s, t))
    return out


def ck_contract(f: TargetFunction, k: int, w) -> np.ndarray:
    """``C_k(w^{(x)(k-1)})`` as a d-vector, i.e. contract all but one slot."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(f.d)
    if k < 1:
        raise ValueError("need k >= 1 to leave a free index")
    for s, t in ck_coefficient(f, k):
        u = f.U[t]
        out += s * float(u @ w) ** (k - 1) * u
    return out


def ck_full_contract(f: TargetFunction, k: int, w) -> float:
    """``C_k(w^{(x)k})``."""
    w = np.asarray(w, dtype=float)
    return float(sum(s * float(f.U[t] @ w) ** k for s, t in ck_coefficient(f, k)))


def expected_hessian(f: TargetFunction) -> HessianSummary:
    """Closed-form ``E[hess f] = sum_t 2 alpha_{t,2} u_t u_t^T`` with rank and kappa."""
    H = np.zeros((f.d, f.d))
    for s, t in ck_coefficient(f, 2):
        u = f.U[t]
        H += s * np.outer(u, u)
    H = 0.5 * (H + H.T)
    evals, evecs = np.linalg.eigh(H)
    scale = np.max(np.abs(evals)) if evals.size else 0.0
    keep = np.abs(evals) > RANK_TOL * scale if scale > 0 else np.zeros_like(evals, dtype=bool)
    rank = int(keep.sum())
    if rank == 0:
        kappa = 0.0
    else:
        kappa = (1.0 / np.min(np.abs(evals[keep]))) / math.sqrt(f.r)
    basis = evecs[:, keep]
    return HessianSummary(H=H, rank=rank, kappa=float(kappa), principal_basis=basis)


def projector(f: TargetFunction) -> np.ndarray:
    """Orthogonal projector onto the principal subspace span(U)."""
    return f.U.T @ f.U


# -- constructors used by the experiments ------------------------------------

def basis_direction(d: int, i: int = 0) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return e


def single_index(direction, series: HermiteSeries) -> TargetFunction:
    return make_target(np.atleast_2d(direction), [series])


def experiment_target(d: int, p: int = 4, direction=None) -> TargetFunction:
    """``He_2(u.x)/2 + He_p(u.x)/sqrt(2 p!)``, unit norm for p != 2."""
    if p < 3:
        raise ValueError("p must be at least 3")
    u = basis_direction(d) if direction is None else np.asarray(direction, dtype=float)
    coeffs = np.zeros(p + 1)
    coeffs[2] = 0.5
    coeffs[p] = 1.0 / math.sqrt(2.0 * math.factorial(p))
    return single_index(u, HermiteSeries(coeffs))


def hermite_target(d: int, p: int, direction=None) -> TargetFunction:
    """``He_p(u.x)/sqrt(p!)``."""
    u = basis_direction(d) if direction is None else np.asarray(direction, dtype=float)
    coeffs = np.zeros(p + 1)
    coeffs[p] = 1.0 / math.sqrt(math.factorial(p))
    return single_index(u, HermiteSeries(coeffs))
