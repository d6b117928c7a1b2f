"""Noise-level search: minimise the smallest singular value of the corrected matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, NoiseSpec
from .veronese import MomentStatistics, VeroneseSpec

INV_PHI = (math.sqrt(5) - 1) / 2
DEFAULT_GRID = 64
DEFAULT_EPS_REL = 1e-3


class BracketError(RuntimeError):
    """The grid minimum sits on the upper end of the search interval."""


@dataclass(frozen=True)
class SigmaEstimate:
    sigma: float
    min_singular_value: float
    c_n: np.ndarray
    status: str  # "threshold-hit" or "global-min"
    epsilon: float
    epsilon_default: bool
    grid: np.ndarray
    grid_values: np.ndarray


def golden_section(f, a: float, b: float, tol: float):
    """Golden-section minimisation of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` for the best point evaluated.
    """
    best = min(((a, f(a)), (b, f(b))), key=lambda p: p[1])
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return min((best, (c, fc), (d, fd)), key=lambda p: p[1])


def _smallest(m: np.ndarray):
    _, sv, vt = np.linalg.svd(m)
    v = vt[-1]
    # sign convention: largest-magnitude entry positive
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return float(sv[-1]), v / np.linalg.norm(v), float(sv[0])


def objective(ds: Dataset | None, spec: VeroneseSpec, sigma: float,
              stats: MomentStatistics | None = None):
    """Smallest singular value of the corrected matrix at noise std ``sigma``.

    Returns ``(value, unit right singular vector)``.  Pass precomputed
    ``stats`` to avoid another pass over the data.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if stats is None:
        stats = MomentStatistics.from_dataset(ds, spec)
    value, vec, _ = _smallest(stats.corrected(NoiseSpec.from_sigma(sigma)))
    return value, vec


def estimate_sigma(ds: Dataset | None, spec: VeroneseSpec, sigma_max: float | None = None,
                   grid: int = DEFAULT_GRID, epsilon: float | None = None,
                   stats: MomentStatistics | None = None, tol: float | None = None) -> SigmaEstimate:
    """Grid scan on ``[0, sigma_max]`` followed by golden-section refinement.

    Every local minimum of the grid values is refined on its two neighbouring
    grid intervals.  The smallest ``sigma`` whose refined minimum falls below
    ``epsilon`` wins ("threshold-hit"); a basin at ``sigma = 0`` is reported
    as exactly 0.  If no basin gets below ``epsilon`` the lowest refined
    minimum is returned ("global-min").  ``epsilon`` defaults to 1e-3 times
    the largest singular value at ``sigma = 0`` and ``sigma_max`` to the
    sample std of ``y``.
    """
    if grid < 8:
        raise ValueError("grid must have at least 8 points")
    if stats is None:
        stats = MomentStatistics.from_dataset(ds, spec)
    if sigma_max is None:
        if ds is None:
            raise ValueError("sigma_max is required when no dataset is given")
        sigma_max = float(np.std(ds.y))
    if not sigma_max > 0:
        raise ValueError("sigma_max must be positive")
    tol = sigma_max / 1e4 if tol is None else tol

    def f(s):
        return _smallest(stats.corrected(NoiseSpec.from_sigma(s)))[0]

    sigmas = np.linspace(0.0, sigma_max, grid)
    values = np.empty(grid)
    for i, s in enumerate(sigmas):
        values[i] = f(s)
    eps_default = epsilon is None
    if eps_default:
        epsilon = DEFAULT_EPS_REL * _smallest(stats.corrected(0.0))[2]

    basins = []
    for j in range(grid):
        left = j == 0 or values[j] <= values[j - 1]
        right = j == grid - 1 or values[j] < values[j + 1]
        if not (left and right):
            continue
        if j == grid - 1:
            if values[j] < epsilon and not basins:
                raise BracketError(
                    f"objective still decreasing at sigma_max={sigma_max:g}; widen the interval"
                )
            continue
        if j == 0:
            basins.append((0.0, float(values[0])))
            continue
        s_ref, f_ref = golden_section(f, sigmas[j - 1], sigmas[j + 1], tol)
        basins.append((s_ref, f_ref) if f_ref <= values[j] else (float(sigmas[j]), float(values[j])))
    if not basins:
        raise BracketError(
            f"objective still decreasing at sigma_max={sigma_max:g}; widen the interval"
        )
    hits = [b for b in basins if b[1] < epsilon]
    if hits:
        status, (sigma, _) = "threshold-hit", hits[0]
    else:
        status, (sigma, _) = "global-min", min(basins, key=lambda b: b[1])
    value, vec, _ = _smallest(stats.corrected(NoiseSpec.from_sigma(sigma)))
    return SigmaEstimate(float(sigma), value, vec, status, float(epsilon), eps_default,
                         sigmas, values)
