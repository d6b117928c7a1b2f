"""Maximum-likelihood switching on independent residual snippets.

Under the true mode the residual

    z_k(d) = y_k - sum_j a_jd y_{k-j} - sum_j c_jd u_{k-j}

equals ``eta_k - sum_j a_jd eta_{k-j}``, a moving average of the noise.
Residuals more than ``n_a`` steps apart share no noise samples, so blocks of
``n_l`` consecutive residuals separated by ``n_a`` skipped samples are
independent Gaussian vectors whose covariance depends on the block's mode
sequence.  Each block is decoded by enumerating all ``n**n_l`` sequences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, SarModel

LOG_2PI = math.log(2 * math.pi)
REGULARIZATION = 1e-12


class CovarianceError(np.linalg.LinAlgError):
    """Snippet covariance is not positive definite."""


def residual(ds: Dataset, model: SarModel, k: int, mode: int) -> float:
    """``z_k`` under subsystem ``mode`` (1-based)."""
    if not 1 <= k <= ds.N:
        raise IndexError(f"time index {k} outside 1..{ds.N}")
    if not 1 <= mode <= model.n:
        raise ValueError(f"mode {mode} outside 1..{model.n}")
    return float(residuals(ds, model, np.array([k]))[mode - 1, 0])


def residuals(ds: Dataset, model: SarModel, ks=None) -> np.ndarray:
    """Residuals for every mode, shape ``(n, len(ks))``; ``ks`` defaults to ``1..N``."""
    if (model.n_a, model.n_c) != (ds.n_a, ds.n_c):
        raise ValueError("model orders do not match the dataset")
    ks = np.arange(1, ds.N + 1) if ks is None else np.asarray(ks)
    if ks.size and (ks.min() < 1 or ks.max() > ds.N):
        raise IndexError(f"residual index outside 1..{ds.N}")
    # b . r = -z for b = [-1, a, c]
    return -(model.coefficient_vectors() @ ds.regressors(False, ks=ks).T)


@dataclass(frozen=True)
class SnippetPlan:
    n_l: int
    n_a: int
    starts: np.ndarray

    @property
    def fraction_used(self) -> float:
        return self.n_l / (self.n_l + self.n_a)


def snippet_plan(N: int, n_a: int, n_l: int) -> SnippetPlan:
    """Starts ``k = (n_a + 1) + (n_a + n_l) l`` for every snippet that fits in ``1..N``."""
    if n_l < 1 or n_a < 0:
        raise ValueError("need n_l >= 1 and n_a >= 0")
    starts = np.arange(n_a + 1, N - n_l + 2, n_a + n_l)
    if starts.size == 0:
        raise ValueError(f"no snippet of length {n_l} fits in N={N} samples")
    starts.setflags(write=False)
    return SnippetPlan(n_l, n_a, starts)


def snippet_covariance(hypothesis, model: SarModel, sigma: float) -> np.ndarray:
    """Covariance ``sigma^2 A A^T`` of the residual block under ``hypothesis`` (1-based modes)."""
    hyp = np.asarray(hypothesis, dtype=np.int64)
    n_l, n_a = hyp.size, model.n_a
    a = model.a
    A = np.zeros((n_l, n_l + n_a))
    for t, mode in enumerate(hyp):
        A[t, n_a + t] = 1.0
        for j in range(1, n_a + 1):
            A[t, n_a + t - j] = -a[mode - 1, j - 1]
    return sigma**2 * (A @ A.T)


def snippet_loglik(z, cov) -> float:
    """Gaussian log-density of ``z`` under ``N(0, cov)`` via Cholesky."""
    z = np.asarray(z, dtype=float)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise CovarianceError("snippet covariance is not positive definite") from exc
    w = np.linalg.solve(L, z)
    return float(-0.5 * z.size * LOG_2PI - np.log(np.diag(L)).sum() - 0.5 * w @ w)


def hypotheses(n: int, n_l: int) -> np.ndarray:
    """All mode sequences of length ``n_l`` in lexicographic order (1-based)."""
    return np.array(list(itertools.product(range(1, n + 1), repeat=n_l)), dtype=np.int64)


@dataclass(frozen=True)
class DecodedSnippet:
    start: int
    hypothesis: tuple[int, ...]
    loglik: float


@dataclass(frozen=True)
class TransitionCounts:
    n_ij: np.ndarray

    def __post_init__(self):
        c = np.array(self.n_ij, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or np.any(c < 0):
            raise ValueError("counts must be a square non-negative matrix")
        c.setflags(write=False)
        object.__setattr__(self, "n_ij", c)

    @property
    def n(self) -> int:
        return self.n_ij.shape[0]

    @property
    def total(self) -> int:
        return int(self.n_ij.sum())


@dataclass(frozen=True)
class Decoding:
    """Per-snippet decisions in array form; indexing yields :class:`DecodedSnippet`."""

    starts: np.ndarray
    hypotheses: np.ndarray  # (snippets, n_l), 1-based modes
    logliks: np.ndarray
    regularized: tuple = field(default=())

    def __len__(self):
        return self.starts.size

    def __getitem__(self, i) -> DecodedSnippet:
        return DecodedSnippet(int(self.starts[i]), tuple(int(v) for v in self.hypotheses[i]),
                              float(self.logliks[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def modes(self) -> np.ndarray:
        """Decoded modes as ``(time index, mode)`` pairs flattened over snippets."""
        n_l = self.hypotheses.shape[1]
        ks = (self.starts[:, None] + np.arange(n_l)).ravel()
        return np.stack([ks, self.hypotheses.ravel()], axis=1)


def _hypothesis_factors(model: SarModel, sigma: float, n_l: int):
    hyps = hypotheses(model.n, n_l)
    chols, logdets, regularized = [], [], []
    for h in hyps:
        cov = snippet_covariance(h, model, sigma)
        try:
            L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            cov = cov + REGULARIZATION * max(np.trace(cov), np.finfo(float).tiny) * np.eye(n_l)
            L = np.linalg.cholesky(cov)
            regularized.append(tuple(int(v) for v in h))
        chols.append(L)
        logdets.append(2 * np.log(np.diag(L)).sum())
    return hyps, chols, np.array(logdets), tuple(regularized)


def hypothesis_logliks(Z: np.ndarray, starts, model: SarModel, sigma: float, n_l: int):
    """Log-likelihood of every hypothesis for every snippet.

    ``Z`` is the ``(n, N)`` residual table from :func:`residuals` (column
    ``k - 1`` holds time ``k``).  Returns ``(hyps, logliks, regularized)``
    with ``logliks[s, h]`` for snippet ``s`` and hypothesis row ``h``.  With
    ``sigma == 0`` the score is minus the residual sum of squares.
    """
    starts = np.asarray(starts)
    cols = starts[:, None] - 1 + np.arange(n_l)  # (S, n_l)
    if sigma == 0 or sigma**2 == 0:  # an underflowing variance carries no scale
        hyps = hypotheses(model.n, n_l)
        out = np.empty((starts.size, len(hyps)))
        for i, h in enumerate(hyps):
            z = Z[h - 1, cols]
            out[:, i] = -np.einsum("st,st->s", z, z)
        return hyps, out, ()
    hyps, chols, logdets, regularized = _hypothesis_factors(model, sigma, n_l)
    out = np.empty((starts.size, len(hyps)))
    for i, h in enumerate(hyps):
        z = Z[h - 1, cols]  # (S, n_l)
        w = np.linalg.solve(chols[i], z.T)
        out[:, i] = -0.5 * n_l * LOG_2PI - 0.5 * logdets[i] - 0.5 * np.einsum("ts,ts->s", w, w)
    return hyps, out, regularized


def decode_snippet(ds: Dataset, model: SarModel, sigma: float, start: int, n_l: int) -> DecodedSnippet:
    """Most likely mode sequence for the block ``start .. start + n_l - 1``.

    Ties go to the lexicographically smallest sequence.  With ``sigma == 0``
    the sequence with the smallest residual sum of squares is returned and
    ``loglik`` holds minus that sum.
    """
    if start < 1 or start + n_l - 1 > ds.N:
        raise IndexError("snippet does not fit in the record")
    ks = np.arange(start, start + n_l)
    Z = np.zeros((model.n, ds.N))
    Z[:, ks - 1] = residuals(ds, model, ks)
    hyps, ll, _ = hypothesis_logliks(Z, np.array([start]), model, sigma, n_l)
    best = int(np.argmax(ll[0]))
    return DecodedSnippet(int(start), tuple(int(v) for v in hyps[best]), float(ll[0, best]))


def count_transitions(hyps: np.ndarray, n: int) -> TransitionCounts:
    """Within-snippet ``i -> j`` transition counts (never across gaps)."""
    hyps = np.asarray(hyps)
    src = hyps[:, :-1].ravel() - 1
    dst = hyps[:, 1:].ravel() - 1
    counts = np.bincount(src * n + dst, minlength=n * n).reshape(n, n)
    return TransitionCounts(counts)


def decode_all(ds: Dataset, model: SarModel, sigma: float, plan: SnippetPlan):
    """Decode every snippet of ``plan``; returns ``(Decoding, TransitionCounts)``."""
    if plan.n_a != model.n_a:
        raise ValueError("snippet plan gap must equal the model's AR order")
    if plan.starts.size and plan.starts[-1] + plan.n_l - 1 > ds.N:
        raise ValueError("snippet plan runs past the end of the record")
    Z = residuals(ds, model)
    hyps, ll, regularized = hypothesis_logliks(Z, plan.starts, model, sigma, plan.n_l)
    best = np.argmax(ll, axis=1)
    chosen = hyps[best]
    decoding = Decoding(plan.starts, chosen, ll[np.arange(len(best)), best], regularized)
    return decoding, count_transitions(chosen, model.n)
