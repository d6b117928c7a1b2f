"""Identification pipeline: noise level -> subsystems -> switching -> PTM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import Decoding, TransitionCounts, decode_all, snippet_plan
from .model import Dataset, SarModel, TransitionMatrix
from .ptm import estimate_ptm
from .sigma import SigmaEstimate, estimate_sigma
from .extraction import extract_subsystems
from .veronese import MomentStatistics, veronese_spec


@dataclass(frozen=True)
class Identification:
    sigma: SigmaEstimate
    b: np.ndarray
    model: SarModel


@dataclass(frozen=True)
class PipelineResult:
    identification: Identification | None
    model: SarModel
    sigma: float
    decoding: Decoding
    counts: TransitionCounts
    ptm: TransitionMatrix


def identify(ds: Dataset, n: int, sigma_max: float | None = None, grid: int = 64,
             epsilon: float | None = None, pool: int | None = None, seed=0,
             scale: bool = False) -> Identification:
    """Estimate the noise std and the ``n`` subsystems from ``(u, y)``."""
    spec = veronese_spec(n, ds.n_a, ds.n_c)
    stats = MomentStatistics.from_dataset(ds, spec, scale=scale)
    est = estimate_sigma(ds, spec, sigma_max=sigma_max, grid=grid, epsilon=epsilon, stats=stats)
    b = extract_subsystems(est.c_n, spec, ds, n=n, pool=pool, seed=seed)
    return Identification(est, b, SarModel.from_coefficient_vectors(b, ds.n_a))


def run_pipeline(ds: Dataset, n: int, n_l: int = 2, smoothing: float = 0.0,
                 model: SarModel | None = None, sigma: float | None = None,
                 **identify_kw) -> PipelineResult:
    """Full chain.  Passing both ``model`` and ``sigma`` skips identification."""
    ident = None
    if model is None or sigma is None:
        ident = identify(ds, n, **identify_kw)
        model = ident.model if model is None else model
        sigma = ident.sigma.sigma if sigma is None else sigma
    plan = snippet_plan(ds.N, ds.n_a, n_l)
    decoding, counts = decode_all(ds, model, sigma, plan)
    return PipelineResult(ident, model, sigma, decoding, counts, estimate_ptm(counts, smoothing))
