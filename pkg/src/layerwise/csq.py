"""Correlational statistical query lower-bound construction.

The hard class is ``{x -> He_p(v.x)/sqrt(p!) : v in S}`` for a set ``S`` of
nearly orthogonal unit vectors. Two members correlate as ``(v.w)^p``, so a
small pairwise inner product makes the class nearly uncorrelated, and any
correlational query of tolerance ``tau`` can only rule out a few members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionFailed, IndexOutOfRange
from .hermite import he_eval
from .rng import stream


@dataclass(frozen=True)
class HardClass:
    directions: np.ndarray
    degree: int
    epsilon_cert: float

    @property
    def M(self) -> int:
        return self.directions.shape[0]

    @property
    def d(self) -> int:
        return self.directions.shape[1]

    @property
    def correlation_bound(self) -> float:
        """Certified bound on ``|E[f_i f_j]|`` for ``i != j``."""
        return self.epsilon_cert**self.degree


def certify(directions) -> float:
    """Exhaustive ``max_{i != j} |v_i . v_j|`` (0 for a single vector)."""
    V = np.asarray(directions, dtype=float)
    if V.shape[0] < 2:
        return 0.0
    G = np.abs(V @ V.T)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def build_quasi_orthogonal_set(d: int, M: int, epsilon: float, seed: int, max_restarts: int = 20,
                               degree: int = 1) -> HardClass:
    """Greedy rejection sampling of ``M`` unit vectors with pairwise ``|v.w| <= epsilon``.

    Gives up with :class:`ConstructionFailed` after ``max_restarts * M``
    candidate draws.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if M < 1:
        raise ValueError("M must be positive")
    rng = stream(seed, "quasi-orthogonal", d, M)
    kept = np.empty((M, d))
    count = 0
    budget = max_restarts * M
    for _ in range(budget):
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        if count == 0 or np.max(np.abs(kept[:count] @ v)) <= epsilon:
            kept[count] = v
            count += 1
            if count == M:
                break
    if count < M:
        raise ConstructionFailed(f"kept {count} of {M} vectors after {budget} draws (d={d}, eps={epsilon})")
    kept.setflags(write=False)
    return HardClass(directions=kept, degree=degree, epsilon_cert=certify(kept))


def with_degree(cls: HardClass, p: int) -> HardClass:
    return HardClass(directions=cls.directions, degree=p, epsilon_cert=cls.epsilon_cert)


def hard_fn_eval(cls: HardClass, i: int, x):
    """``He_p(v_i . x) / sqrt(p!)``; ``x`` may be a point or a matrix of rows."""
    if not 0 <= i < cls.M:
        raise IndexOutOfRange(f"index {i} outside [0, {cls.M})")
    z = np.asarray(x, dtype=float) @ cls.directions[i]
    return he_eval(cls.degree, z) / math.sqrt(math.factorial(cls.degree))


def pairwise_correlation(u, v, p: int) -> float:
    """``E[f_u f_v] = (u.v)^p`` for unit ``u``, ``v``."""
    return float(np.dot(u, v)) ** p


def csq_query_lower_bound(M: int, tau: float, epsilon: float) -> float:
    """``M (tau^2 - epsilon) / 2`` queries, or 0 when ``tau^2 <= epsilon``."""
    gap = tau * tau - epsilon
    return M * gap / 2.0 if gap > 0 else 0.0


def tolerance_bound(q: float, d: int, p: int) -> float:
    """``log(q d)^{p/4} / d^{p/4}``."""
    if q * d <= 1:
        raise ValueError("need q * d > 1")
    return math.log(q * d) ** (p / 4.0) / d ** (p / 4.0)


def implied_sample_size(tau: float) -> float:
    """Heuristic ``n ~ 1/tau^2`` (a heuristic reading, not a bound)."""
    return 1.0 / (tau * tau)


@dataclass
class GameResult:
    survivors: np.ndarray
    eliminated_per_query: list


def adversary_game(cls: HardClass, queries, tau: float) -> GameResult:
    """Answer every query with 0 and drop members whose correlation exceeds ``tau``.

    ``queries`` is a sequence of ``(w, p)`` with ``p`` equal to the class
    degree; ``w`` is normalised. While two or more members survive, the
    learner cannot tell them apart.
    """
    alive = np.ones(cls.M, dtype=bool)
    per_query = []
    for w, p in queries:
        if p != cls.degree:
            raise ValueError("query degree must equal the class degree")
        w = np.asarray(w, dtype=float)
        w = w / np.linalg.norm(w)
        # |v.w| <= 1 for unit vectors; clip the rounding excess so tau >= 1 never eliminates
        corr = np.clip(cls.directions @ w, -1.0, 1.0) ** p
        drop = alive & (np.abs(corr) > tau)
        per_query.append(int(drop.sum()))
        alive &= ~drop
    return GameResult(survivors=np.flatnonzero(alive), eliminated_per_query=per_query)


def elimination_cap(tau: float, corr_bound: float) -> float:
    """Per-query cap ``2/(tau^2 - eps) + 2`` on eliminated members."""
    return 2.0 / (tau * tau - corr_bound) + 2.0


def random_queries(cls: HardClass, count: int, seed: int, from_class: float = 0.5):
    """Queries mixing random class directions and uniform random directions."""
    rng = stream(seed, "queries")
    out = []
    for _ in range(count):
        if rng.random() < from_class:
            out.append((cls.directions[rng.integers(cls.M)].copy(), cls.degree))
        else:
            v = rng.standard_normal(cls.d)
            out.append((v / np.linalg.norm(v), cls.degree))
    return out


def csq_report(d: int, M: int, epsilon: float, p: int, tau: float, seed: int, max_restarts: int = 20) -> dict:
    """One report row: the certified class, the query lower bound and a game run."""
    cls = with_degree(build_quasi_orthogonal_set(d, M, epsilon, seed, max_restarts), p)
    eps_corr = cls.correlation_bound
    lb = csq_query_lower_bound(M, tau, eps_corr)
    q = max(int(math.floor(lb)) - 1, 0)
    game = adversary_game(cls, random_queries(cls, q, seed), tau)
    return {
        "M": M, "d": d, "p": p, "eps_cert": cls.epsilon_cert, "tau": tau,
        "query_lower_bound": lb, "queries": q, "survivors_after_q_queries": int(game.survivors.size),
        "implied_n_heuristic": implied_sample_size(tau),
    }
