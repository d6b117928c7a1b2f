import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarjump import (MomentStatistics, NoiseSpec, VeroneseSpec, accumulate,
                     corrected_sample_matrix, decoupling_coefficients, simulate,
                     unbiased_power, veronese_map, veronese_spec)

import oracles

finite = st.floats(-3, 3, allow_nan=False)


def test_veronese_small():
    np.testing.assert_allclose(veronese_map([1, 2], 2), [1, 2, 4])
    v = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(veronese_map(v, 1), v)


def test_spec_dimension():
    spec = veronese_spec(2, 1, 1)
    assert spec.dim == 6 == math.comb(4, 2)
    assert spec.n_noisy == 2
    assert VeroneseSpec(3, 4).dim == math.comb(6, 3)


@given(st.lists(finite, min_size=1, max_size=4), st.integers(1, 4))
def test_veronese_matches_oracle(v, n):
    np.testing.assert_allclose(veronese_map(v, n), oracles.veronese(v, n), rtol=1e-12, atol=1e-12)


def test_veronese_batched(rng):
    v = rng.standard_normal((5, 3))
    out = veronese_map(v, 2)
    for row, vec in zip(out, v):
        np.testing.assert_allclose(row, veronese_map(vec, 2))


def test_decoupling_examples(model, spec, rng):
    b = [[0.5, -1.0, 2.0]]
    np.testing.assert_allclose(decoupling_coefficients(b), b[0])
    np.testing.assert_allclose(decoupling_coefficients([[1, 0], [0, 1]]), [0, 1, 0])
    B = model.coefficient_vectors()
    c = decoupling_coefficients(B, spec)
    assert c.shape == (6,)
    r = rng.standard_normal((100, 3))
    np.testing.assert_allclose(veronese_map(r, spec) @ c, (r @ B[0]) * (r @ B[1]), atol=1e-10)


@settings(max_examples=50)
@given(st.integers(1, 3), st.integers(1, 4), st.data())
def test_decoupling_matches_symbolic(n, s, data):
    b = np.array([[data.draw(finite) for _ in range(s)] for _ in range(n)])
    poly = oracles.product_polynomial(b)
    expected = [poly.get(e, 0.0) for e in oracles.monomials(n, s)]
    np.testing.assert_allclose(decoupling_coefficients(b), expected, atol=1e-9)


def test_decoupling_shape_mismatch(spec):
    with pytest.raises(ValueError):
        decoupling_coefficients([[1, 2], [3, 4]], spec)


@pytest.mark.parametrize("h", range(7))
@pytest.mark.parametrize("sigma", [0.0, 0.1, 0.5, 2.0])
def test_unbiased_power_matches_hermite(h, sigma):
    y = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(unbiased_power(y, h, NoiseSpec.from_sigma(sigma)),
                               oracles.hermite_power(y, h, sigma), rtol=1e-10, atol=1e-10)


def test_unbiased_power_closed_forms():
    s = 0.5
    nz = NoiseSpec.from_sigma(s)
    y = 1.7
    assert unbiased_power(y, 1, nz) == pytest.approx(y)
    assert unbiased_power(y, 2, nz) == pytest.approx(y**2 - s**2)
    assert unbiased_power(y, 4, nz) == pytest.approx(y**4 - 6 * s**2 * y**2 + 3 * s**4)


def test_unbiased_power_monte_carlo():
    rng = np.random.default_rng(0)
    eta = 0.5 * rng.standard_normal(10**6)
    vals = unbiased_power(1.0 + eta, 4, NoiseSpec(0.25))
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - 1.0) < 3 * se


def test_corrected_sample_matrix_noiseless(noiseless, spec):
    k = 17
    nu = veronese_map(noiseless.regressors(ks=[k])[0], spec)
    np.testing.assert_allclose(corrected_sample_matrix(noiseless, k, spec, NoiseSpec(0.0)),
                               np.outer(nu, nu))


def test_corrected_sample_matrix_entries(noisy, spec):
    k = 40
    sigma2 = 0.01
    m = corrected_sample_matrix(noisy, k, spec, NoiseSpec(sigma2))
    yk, yk1 = noisy.y_at(k), noisy.y_at(k - 1)
    # nu = [x_k^2, x_k x_{k-1}, x_k u, x_{k-1}^2, x_{k-1} u, u^2]
    idx = spec.index
    i_xx = idx[(2, 0, 0)]
    # (x_k^2)(u^2) entry -> (y_k^2 - sigma^2) u^2
    u = noisy.u_at(k - 1)
    assert m[i_xx, idx[(0, 0, 2)]] == pytest.approx((yk**2 - sigma2) * u**2)
    # (x_k x_{k-1})(u^2) -> y_k y_{k-1} u^2, no correction
    assert m[idx[(1, 1, 0)], idx[(0, 0, 2)]] == pytest.approx(yk * yk1 * u**2)
    np.testing.assert_allclose(m, m.T)
    with pytest.raises(IndexError):
        corrected_sample_matrix(noisy, noisy.N + 1, spec, NoiseSpec(sigma2))


def test_streamed_matches_per_sample(model, ptm, spec):
    ds = simulate(model, ptm, NoiseSpec(0.05), 3000, seed=1)
    nz = NoiseSpec(0.05)
    direct = sum(corrected_sample_matrix(ds, k, spec, nz) for k in range(1, ds.N + 1)) / ds.N
    for chunk in (7, 1000, 65536):
        acc = accumulate(ds, spec, nz, chunk_size=chunk)
        assert acc.count == ds.N
        np.testing.assert_allclose(acc.m, direct, rtol=1e-12, atol=1e-12)


def test_null_space_noiseless(noiseless, spec, model):
    m = accumulate(noiseless, spec, NoiseSpec(0.0)).m
    assert m.shape == (6, 6)
    c = decoupling_coefficients(model.coefficient_vectors(), spec)
    assert np.linalg.norm(m @ c) <= 1e-8 * np.linalg.norm(m)
    sv = np.linalg.svd(m, compute_uv=False)
    assert sv[-1] < 1e-8 * sv[0]


def test_doubling_dataset_leaves_mean(noisy, spec):
    # the same regressors seen twice: every mean, hence the matrix, is unchanged
    a = MomentStatistics.from_dataset(noisy.truncate(2000), spec)
    doubled = a.merge(a)
    assert doubled.count == 4000
    np.testing.assert_allclose(doubled.corrected(0.1), a.corrected(0.1), rtol=1e-14)


def test_correction_sharpens_null_space(model, ptm, spec):
    ds = simulate(model, ptm, NoiseSpec(0.01), 10**6, seed=3, input_kind="gaussian")
    stats = MomentStatistics.from_dataset(ds, spec)
    s_true = np.linalg.svd(stats.corrected(0.1), compute_uv=False)[-1]
    s_zero = np.linalg.svd(stats.corrected(0.0), compute_uv=False)[-1]
    assert s_zero >= 10 * s_true


def test_spec_layout_mismatch(noisy):
    with pytest.raises(ValueError):
        MomentStatistics.from_dataset(noisy, veronese_spec(2, 2, 1))
