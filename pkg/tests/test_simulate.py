import numpy as np
import pytest

from sarjump import (NoiseSpec, SarModel, TransitionMatrix, generate_input, noise_to_output_ratio,
                     random_transition_matrix, sample_markov_chain, simulate)
from sarjump.simulate import UnstableSimulationError

from conftest import P_EXP1


def test_absorbing_chain():
    delta = sample_markov_chain(TransitionMatrix(np.eye(2)), 50, init=[1.0, 0.0], seed=0)
    assert np.all(delta == 1)


def test_alternating_chain():
    delta = sample_markov_chain(TransitionMatrix([[0, 1], [1, 0]]), 7, init=[1, 0], seed=3)
    np.testing.assert_array_equal(delta, [1, 2, 1, 2, 1, 2, 1])


def test_chain_transition_frequencies():
    P = np.array(P_EXP1)
    delta = sample_markov_chain(TransitionMatrix(P), 10**6, seed=42)
    counts = np.zeros((2, 2))
    np.add.at(counts, (delta[:-1] - 1, delta[1:] - 1), 1)
    freq = counts / counts.sum(axis=1, keepdims=True)
    assert np.abs(freq - P).max() < 0.005


def test_chain_bad_init():
    with pytest.raises(ValueError):
        sample_markov_chain(TransitionMatrix(np.eye(2)), 5, init=[0.5, 0.6])


def test_inputs():
    assert set(np.unique(generate_input("prbs", 400, seed=1))) == {-1.0, 1.0}
    u = generate_input("uniform", 10_000, seed=1)
    assert np.abs(u).max() <= 1
    np.testing.assert_array_equal(u, generate_input("uniform", 10_000, seed=1))
    assert not np.array_equal(u, generate_input("uniform", 10_000, seed=2))
    np.testing.assert_array_equal(generate_input("custom", 3, values=[1, 2, 3]), [1, 2, 3])
    with pytest.raises(ValueError):
        generate_input("custom", 3, values=[1, 2])
    with pytest.raises(ValueError):
        generate_input("chirp", 3)


def test_noiseless_output_equals_state(model, ptm):
    ds = simulate(model, ptm, NoiseSpec(0.0), 1000, seed=0)
    np.testing.assert_array_equal(ds.y, ds.truth.x)
    assert noise_to_output_ratio(ds) == 0.0


def test_one_step_copy():
    m = SarModel.from_coefficients([[0.0]], [[1.0]])
    ds = simulate(m, TransitionMatrix([[1.0]]), NoiseSpec(0.0), 200, seed=0)
    np.testing.assert_array_equal(ds.y[1:], ds.u)  # x_k = u_{k-1}


def test_zero_system_gamma_is_one():
    m = SarModel.from_coefficients([[0.0]], [[0.0]])
    ds = simulate(m, TransitionMatrix([[1.0]]), NoiseSpec(0.04), 500, seed=0)
    assert noise_to_output_ratio(ds) == 1.0


def test_recursion_holds(model, ptm):
    ds = simulate(model, ptm, NoiseSpec(0.01), 2000, seed=4)
    b = model.coefficient_vectors()[ds.truth.delta - 1]
    r = ds.regressors(use_truth=True)
    np.testing.assert_allclose(np.einsum("ks,ks->k", b, r), 0.0, atol=1e-12)


def test_prefix_nesting(model, ptm):
    long = simulate(model, ptm, NoiseSpec(0.03), 5000, seed=9)
    short = simulate(model, ptm, NoiseSpec(0.03), 1200, seed=9)
    np.testing.assert_array_equal(long.truncate(1200).y, short.y)
    np.testing.assert_array_equal(long.truncate(1200).u, short.u)
    np.testing.assert_array_equal(long.truth.delta[:1200], short.truth.delta)


def test_noise_level_leaves_path_unchanged(model, ptm):
    a = simulate(model, ptm, NoiseSpec(0.01), 1000, seed=2)
    b = simulate(model, ptm, NoiseSpec(0.04), 1000, seed=2)
    np.testing.assert_array_equal(a.truth.delta, b.truth.delta)
    np.testing.assert_array_equal(a.truth.x, b.truth.x)
    np.testing.assert_allclose(2 * a.truth.eta, b.truth.eta)


def test_gamma_regime(model, ptm):
    ds = simulate(model, ptm, NoiseSpec(0.01), 10**6, seed=0, input_kind="gaussian")
    assert abs(noise_to_output_ratio(ds) - 0.0888) <= 0.03


def test_unstable():
    m = SarModel.from_coefficients([[1.5]], [[1.0]])
    with pytest.raises(UnstableSimulationError):
        simulate(m, TransitionMatrix([[1.0]]), NoiseSpec(0.0), 1000, seed=0, L=1e3)


def test_random_transition_matrix():
    P = random_transition_matrix(4, seed=3)
    assert P.n == 4
    np.testing.assert_allclose(P.p.sum(axis=1), 1.0, atol=1e-12)
    assert P == random_transition_matrix(4, seed=3)
