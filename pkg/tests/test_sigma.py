import math

import numpy as np
import pytest

from sarjump import MomentStatistics, NoiseSpec, estimate_sigma, objective, simulate
from sarjump.sigma import BracketError, golden_section


def test_golden_section_quadratic():
    x, fx = golden_section(lambda t: (t - 0.37) ** 2 + 1.0, 0.0, 1.0, 1e-8)
    assert x == pytest.approx(0.37, abs=1e-7)
    assert fx == pytest.approx(1.0)


def test_golden_section_boundary_minimum():
    x, _ = golden_section(lambda t: t, 0.0, 1.0, 1e-6)
    assert x == 0.0


def test_objective_noiseless(noiseless, spec):
    stats = MomentStatistics.from_dataset(noiseless, spec)
    v0, vec = objective(noiseless, spec, 0.0, stats=stats)
    top = np.linalg.svd(stats.corrected(0.0), compute_uv=False)[0]
    assert v0 < 1e-8 * top
    assert np.linalg.norm(vec) == pytest.approx(1.0)
    assert objective(noiseless, spec, 0.3, stats=stats)[0] > v0
    with pytest.raises(ValueError):
        objective(noiseless, spec, -0.1, stats=stats)


def test_objective_without_stats(noiseless, spec):
    a = objective(noiseless, spec, 0.2)
    b = objective(noiseless, spec, 0.2, stats=MomentStatistics.from_dataset(noiseless, spec))
    assert a[0] == pytest.approx(b[0], rel=1e-12)


def test_objective_dips_near_truth(noisy, spec):
    stats = MomentStatistics.from_dataset(noisy, spec)
    sig = np.linspace(0.0, 0.3, 61)
    vals = [objective(None, spec, s, stats=stats)[0] for s in sig]
    assert abs(sig[int(np.argmin(vals))] - 0.1) <= 0.02


def test_estimate_noiseless(noiseless, spec):
    est = estimate_sigma(noiseless, spec, epsilon=1e-6)
    assert est.sigma == 0.0 and est.status == "threshold-hit"
    assert not est.epsilon_default
    est = estimate_sigma(noiseless, spec)
    assert est.sigma == 0.0 and est.status == "threshold-hit" and est.epsilon_default


def test_estimate_noisy(noisy, spec):
    est = estimate_sigma(noisy, spec)
    assert est.status == "threshold-hit"
    assert abs(est.sigma - 0.1) / 0.1 < 0.2
    assert est.grid.size == 64 and est.grid_values.size == 64
    assert est.c_n.shape == (6,)


def test_global_min_when_epsilon_tiny(noisy, spec):
    est = estimate_sigma(noisy, spec, epsilon=1e-30)
    assert est.status == "global-min"
    assert est.min_singular_value <= est.grid_values.min() + 1e-15


def test_bracket_error(model, ptm, spec):
    ds = simulate(model, ptm, NoiseSpec(0.25), 20_000, seed=0, input_kind="gaussian")
    with pytest.raises(BracketError):
        estimate_sigma(ds, spec, sigma_max=0.2)


def test_invalid_arguments(noisy, spec):
    with pytest.raises(ValueError):
        estimate_sigma(noisy, spec, grid=4)
    with pytest.raises(ValueError):
        estimate_sigma(noisy, spec, sigma_max=0.0)
    with pytest.raises(ValueError):
        estimate_sigma(None, spec, stats=MomentStatistics.from_dataset(noisy, spec))


@pytest.mark.parametrize("sigma2", [0.03, 0.05])
def test_recovery_across_levels(model, ptm, spec, sigma2):
    ds = simulate(model, ptm, NoiseSpec(sigma2), 300_000, seed=5, input_kind="gaussian")
    est = estimate_sigma(ds, spec)
    assert abs(est.sigma - math.sqrt(sigma2)) / math.sqrt(sigma2) < 0.2
