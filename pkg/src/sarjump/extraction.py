"""Recover subsystem coefficient vectors from the decoupling polynomial.

The polynomial ``p(r) = c_n . nu_n(r)`` vanishes on the union of the
hyperplanes ``b_i . r = 0``.  At a point on hyperplane ``i`` (and on no other)
its gradient is parallel to ``b_i``, so gradients taken at points close to
the zero set, grouped by direction, give the subsystems.
"""

from __future__ import annotations

import itertools

import numpy as np

from .model import Dataset
from .simulate import make_rng
from .veronese import VeroneseSpec, veronese_map

DEFAULT_RESTARTS = 20


class ExtractionError(RuntimeError):
    """Gradient directions did not split into ``n`` distinguishable groups."""


def polynomial_value(c_n, spec: VeroneseSpec, points) -> np.ndarray:
    return veronese_map(points, spec) @ np.asarray(c_n, dtype=float)


def polynomial_gradient(c_n, spec: VeroneseSpec, point) -> np.ndarray:
    """Analytic gradient of ``c_n . nu_n(r)`` at ``point`` (rows of a 2-D array allowed)."""
    c = np.asarray(c_n, dtype=float)
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    E = spec.exponents
    # pw[l][h] = pts[:, l] ** h
    pw = [[np.ones(len(pts))] for _ in range(spec.s)]
    for l in range(spec.s):
        for _ in range(spec.n):
            pw[l].append(pw[l][-1] * pts[:, l])
    grad = np.zeros(pts.shape)
    for i, e in enumerate(E.tolist()):
        if c[i] == 0.0:
            continue
        for l in range(spec.s):
            if e[l] == 0:
                continue
            term = c[i] * e[l] * pw[l][e[l] - 1]
            for q in range(spec.s):
                if q != l and e[q]:
                    term = term * pw[q][e[q]]
            grad[:, l] += term
    return grad[0] if single else grad


def _cluster_directions(G: np.ndarray, n: int, restarts: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Spherical k-means on unit vectors with ``g`` and ``-g`` identified."""
    best = None
    for _ in range(restarts):
        centers = [G[rng.integers(len(G))]]
        while len(centers) < n:
            sim = np.max(np.abs(G @ np.array(centers).T), axis=1)
            centers.append(G[np.argmin(sim)])
        C = np.array(centers)
        labels = None
        for _ in range(100):
            sims = G @ C.T
            new = np.argmax(np.abs(sims), axis=1)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            if np.any(np.bincount(labels, minlength=n) == 0):
                labels = None
                break
            for i in range(n):
                members = labels == i
                m = (G[members] * np.sign(sims[members, i])[:, None]).sum(axis=0)
                C[i] = m / np.linalg.norm(m)
        if labels is None:
            continue
        cost = float(np.sum(1.0 - np.max(np.abs(G @ C.T), axis=1) ** 2))
        if best is None or cost < best[0]:
            best = (cost, C.copy(), labels.copy())
    if best is None:
        raise ExtractionError("every clustering restart produced an empty group")
    return best[1], best[2]


def extract_subsystems(c_n, spec: VeroneseSpec, ds: Dataset, n: int | None = None,
                       pool: int | None = None, restarts: int = DEFAULT_RESTARTS,
                       seed=0, return_labels: bool = False):
    """Estimate the ``n`` coefficient vectors ``[-1, a, c]`` (rows of the result).

    Gradients are evaluated at the ``pool`` output-based regressors with the
    smallest normalised residual ``|p(r)| / ||grad p(r)||``.  Defaults to
    ``min(10**4, N // 10)`` points, but never fewer than ``10 n``.
    """
    c = np.asarray(c_n, dtype=float)
    n = spec.n if n is None else n
    if n == 1:
        if c[0] == 0:
            raise ExtractionError("leading coefficient is zero; cannot normalise")
        b = (c / -c[0])[None, :]
        return (b, None) if return_labels else b

    R = ds.regressors(False)
    grads = polynomial_gradient(c, spec, R)
    gnorm = np.linalg.norm(grads, axis=1)
    usable = np.flatnonzero(gnorm > 1e-8 * np.median(gnorm))
    if pool is None:
        pool = max(10 * n, min(10**4, ds.N // 10))
    pool = min(pool, usable.size)
    if pool < n:
        raise ExtractionError("not enough usable points to separate the subsystems")
    score = np.abs(polynomial_value(c, spec, R[usable])) / gnorm[usable]
    chosen = usable[np.argsort(score, kind="stable")[:pool]]
    G = grads[chosen] / gnorm[chosen, None]

    C, labels = _cluster_directions(G, n, restarts, make_rng(seed))
    overlap = np.abs(C @ C.T)[np.triu_indices(n, 1)]
    if np.any(overlap > 1 - 1e-6):
        raise ExtractionError("gradient groups are not distinguishable; check n or the data")
    if np.any(np.abs(C[:, 0]) < 1e-12):
        raise ExtractionError("a recovered direction has no output component")
    b = C / -C[:, :1]
    # canonical order: by the first AR coefficient, then the rest
    order = np.lexsort(b[:, ::-1].T)
    b = b[order]
    if return_labels:
        remap = np.empty(n, dtype=np.int64)
        remap[order] = np.arange(n)
        return b, (chosen, remap[labels])
    return b


def match_to_truth(estimated, truth):
    """Best assignment of estimates to true vectors (exhaustive over permutations).

    Returns ``(perm, errors)`` where ``estimated[perm[i]]`` is matched with
    ``truth[i]`` and ``errors[i]`` holds the per-coefficient absolute errors.
    """
    est = np.atleast_2d(np.asarray(estimated, dtype=float))
    tru = np.atleast_2d(np.asarray(truth, dtype=float))
    if est.shape != tru.shape:
        raise ValueError("estimated and true coefficient sets differ in shape")
    best = None
    for perm in itertools.permutations(range(len(tru))):
        err = np.abs(est[list(perm)] - tru)
        total = float(err.sum())
        if best is None or total < best[0]:
            best = (total, perm, err)
    return best[1], best[2]
