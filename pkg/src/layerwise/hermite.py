"""Probabilist's Hermite polynomials and the Gaussian identities built on them.

Convention: ``He_0 = 1``, ``He_1 = x``, ``He_{k+1} = x He_k - k He_{k-1}``, so
that ``E[He_j(z) He_k(z)] = k! delta_jk`` for ``z ~ N(0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

P_MAX = 8

SQRT_2PI = math.sqrt(2.0 * math.pi)


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    if n <= 0:
        return 1
    out = 1
    for k in range(n, 0, -2):
        out *= k
    return out


def he_eval(k: int, x):
    """He_k(x) by the three-term recurrence. Vectorised over ``x``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = x.copy()
    for j in range(1, k):
        prev, cur = cur, x * cur - j * prev
    return cur[()] if cur.ndim == 0 else cur


def he_all(kmax: int, x) -> np.ndarray:
    """Stack ``[He_0(x), ..., He_kmax(x)]`` along a new leading axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = x
    for j in range(1, kmax):
        out[j + 1] = x * out[j] - j * out[j - 1]
    return out


@dataclass(frozen=True)
class HermiteSeries:
    """``sum_k coeffs[k] * He_k``.

    Coefficients multiply the *unnormalised* He_k, so the L2(N(0,1)) norm
    squared is ``sum_k coeffs[k]**2 * k!``.
    """

    coeffs: tuple

    def __init__(self, coeffs: Sequence[float]):
        c = tuple(float(v) for v in coeffs)
        if len(c) == 0:
            c = (0.0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> float:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0.0

    def scaled(self, c: float) -> "HermiteSeries":
        return HermiteSeries([c * a for a in self.coeffs])

    def __call__(self, x):
        return series_eval(self, x)


def series_eval(s: HermiteSeries, x):
    """Evaluate a Hermite series in one recurrence pass (vectorised)."""
    x = np.asarray(x, dtype=float)
    coeffs = s.coeffs
    acc = np.full_like(x, coeffs[0])
    if len(coeffs) == 1:
        return acc[()] if acc.ndim == 0 else acc
    prev = np.ones_like(x)
    cur = x.copy()
    acc = acc + coeffs[1] * cur
    for j in range(1, len(coeffs) - 1):
        prev, cur = cur, x * cur - j * prev
        acc = acc + coeffs[j + 1] * cur
    return acc[()] if acc.ndim == 0 else acc


def series_derivative(s: HermiteSeries) -> HermiteSeries:
    """d/dx of a series, using He_k' = k He_{k-1}."""
    c = s.coeffs
    if len(c) == 1:
        return HermiteSeries([0.0])
    return HermiteSeries([k * c[k] for k in range(1, len(c))])


def series_l2_norm_sq(s: HermiteSeries) -> float:
    """Parseval: ``E[s(z)^2] = sum_k coeffs[k]^2 k!``."""
    return float(sum(a * a * math.factorial(k) for k, a in enumerate(s.coeffs)))


def relu_hermite_coeff(k: int) -> float:
    """c_k = E[relu(z) He_k(z)], so that relu = sum_k c_k / k! He_k."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if k == 0:
        return 1.0 / SQRT_2PI
    if k == 1:
        return 0.5
    if k % 2 == 1:
        return 0.0
    j = k // 2
    sign = 1.0 if (j - 1) % 2 == 0 else -1.0
    return sign * math.factorial(2 * j) / (SQRT_2PI * math.factorial(j) * 2**j * (2 * j - 1))


def relu_series(K: int) -> HermiteSeries:
    """Truncation of the ReLU Hermite expansion at degree ``K``."""
    return HermiteSeries([relu_hermite_coeff(k) / math.factorial(k) for k in range(K + 1)])


def hermite_to_monomial(k: int) -> dict[int, float]:
    """He_k(x) = sum_l h_kl x^l."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    out = {}
    for l in range(k % 2, k + 1, 2):
        sign = -1 if ((k - l) // 2) % 2 else 1
        out[l] = float(sign * double_factorial(k - l - 1) * math.comb(k, l))
    return out


def monomial_to_hermite(k: int) -> dict[int, float]:
    """x^k = sum_l h^{-1}_kl He_l(x); only the nonzero entries are returned."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return {l: float(double_factorial(k - l - 1) * math.comb(k, l)) for l in range(k % 2, k + 1, 2)}


def gaussian_monomial_moment(exponents: Sequence[int]) -> float:
    """E[prod_i w_i^{c_i}] for w ~ N(0, I)."""
    out = 1
    for c in exponents:
        if c < 0:
            raise ValueError("exponents must be nonnegative")
        if c % 2:
            return 0.0
        out *= double_factorial(c - 1)
    return float(out)


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with ``sum w_i f(x_i) ~= E[f(z)]``, z ~ N(0,1)."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / SQRT_2PI
