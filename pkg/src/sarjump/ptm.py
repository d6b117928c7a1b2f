"""Transition-matrix estimation from transition counts, plus error metrics."""

from __future__ import annotations

import warnings

import numpy as np

from .decoder import TransitionCounts
from .model import TransitionMatrix
from .simulate import make_rng


class UnvisitedStateWarning(UserWarning):
    pass


def unvisited_states(counts: TransitionCounts) -> list[int]:
    """Modes (1-based) that never appear as the source of a transition."""
    return [i + 1 for i in np.flatnonzero(counts.n_ij.sum(axis=1) == 0)]


def estimate_ptm(counts: TransitionCounts, smoothing: float = 0.0) -> TransitionMatrix:
    """Row-normalised counts, the maximiser of ``sum n_ij log P_ij`` over stochastic ``P``.

    ``smoothing`` adds a pseudo-count to every cell.  Rows with no counts
    and no smoothing become uniform and raise :class:`UnvisitedStateWarning`.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    c = counts.n_ij.astype(float) + smoothing
    rows = c.sum(axis=1)
    empty = rows == 0
    if empty.any():
        warnings.warn(f"states {unvisited_states(counts)} were never left; rows set to uniform",
                      UnvisitedStateWarning, stacklevel=2)
        c[empty] = 1.0
        rows = c.sum(axis=1)
    return TransitionMatrix(c / rows[:, None])


def ptm_loglik(counts: TransitionCounts, P) -> float:
    """``sum n_ij log P_ij`` with ``0 log 0 = 0``."""
    p = P.p if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    n = counts.n_ij
    mask = n > 0
    if np.any(p[mask] <= 0):
        return -np.inf
    return float(np.sum(n[mask] * np.log(p[mask])))


def normalized_frobenius(estimate, truth) -> float:
    """``||P_hat - P_true||_F / ||P_true||_F``."""
    a = estimate.p if isinstance(estimate, TransitionMatrix) else np.asarray(estimate, dtype=float)
    b = truth.p if isinstance(truth, TransitionMatrix) else np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def verify_mle_optimality(counts: TransitionCounts, candidate: TransitionMatrix,
                          trials: int = 10_000, seed=0) -> bool:
    """Randomised check that no feasible perturbation beats ``candidate``.

    Half the trials are local moves (zero-sum row directions, log-uniform
    step in [1e-6, 0.1], clipped back onto the simplex), half are rows drawn
    uniformly from the simplex.
    """
    rng = make_rng(seed)
    p0 = candidate.p
    n = p0.shape[0]
    if n == 1:
        return True
    base = ptm_loglik(counts, p0)
    slack = 1e-12 * (1.0 + abs(base))
    for t in range(trials):
        if t % 2 == 0:
            d = rng.standard_normal((n, n))
            d -= d.mean(axis=1, keepdims=True)
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            q = np.clip(p0 + 10 ** rng.uniform(-6, -1) * d, 0.0, None)
        else:
            q = rng.dirichlet(np.ones(n), size=n)
        q /= q.sum(axis=1, keepdims=True)
        if ptm_loglik(counts, q) > base + slack:
            return False
    return True
