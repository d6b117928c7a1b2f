"""Synthetic Markov-switched SAR trajectories with additive measurement noise.

Randomness comes from numpy's counter-based Philox generator.  A run seed is
expanded with :class:`numpy.random.SeedSequence` into independent child
streams for the mode chain, the input and the noise, and each stream is
consumed strictly in time order.  Two consequences:

* a length-``N1`` simulation is an exact prefix of a length-``N2`` one
  (same seed, ``N2 > N1``), and
* changing the noise level alone leaves the mode path and the input
  untouched (the noise is ``sigma`` times a fixed standard-normal path).

Normal variates use numpy's ziggurat sampler (``Generator.standard_normal``).
"""

from __future__ import annotations

import numpy as np

from .model import Dataset, NoiseSpec, SarModel, TransitionMatrix, Truth

DEFAULT_STATE_BOUND = 1e6
INPUT_KINDS = ("uniform", "prbs", "gaussian", "custom")

# child-stream slots under a run seed
_CHAIN, _INPUT, _NOISE, _EXTRA = range(4)


class UnstableSimulationError(RuntimeError):
    """The state left the box ``|x_k| <= L``."""


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def child_streams(seed) -> list[np.random.Generator]:
    """The four per-run generators: chain, input, noise, extra."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # same children as ss.spawn(4), without advancing ss's spawn counter
    return [make_rng(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,),
                                            pool_size=ss.pool_size))
            for i in range(4)]


def sample_markov_chain(P: TransitionMatrix, N: int, init=None, seed=0) -> np.ndarray:
    """Draw ``delta_1 .. delta_N`` (values ``1..n``).

    ``init`` is the law of ``delta_1`` and defaults to uniform over modes.
    """
    p = P.p
    n = p.shape[0]
    init = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=float)
    if init.shape != (n,) or np.any(init < 0) or abs(init.sum() - 1) > 1e-12:
        raise ValueError("init must be a probability vector over the modes")
    rng = make_rng(seed)
    draws = rng.random(N)
    last = n - 1
    state = min(int(np.searchsorted(np.cumsum(init), draws[0], side="right")), last)
    cum = np.cumsum(p, axis=1)
    # next state for every (current state, time) pair; the walk below only indexes
    nxt = [np.minimum(np.searchsorted(cum[i], draws[1:], side="right"), last).tolist()
           for i in range(n)]
    out = [0] * N
    out[0] = state
    for k in range(1, N):
        state = nxt[state][k - 1]
        out[k] = state
    return np.array(out, dtype=np.int64) + 1


def generate_input(kind: str, N: int, seed=0, values=None) -> np.ndarray:
    """Input sequence of length ``N``.

    ``uniform`` draws i.i.d. from [-1, 1], ``prbs`` draws random signs,
    ``gaussian`` draws standard normals and ``custom`` copies ``values``.
    """
    if N < 0:
        raise ValueError("input length must be non-negative")
    if kind == "custom":
        if values is None or len(values) != N:
            raise ValueError(f"custom input needs exactly {N} values")
        return np.asarray(values, dtype=float).copy()
    rng = make_rng(seed)
    if kind == "uniform":
        return rng.uniform(-1.0, 1.0, N)
    if kind == "prbs":
        return 2.0 * rng.integers(0, 2, N) - 1.0
    if kind == "gaussian":
        return rng.standard_normal(N)
    raise ValueError(f"unknown input kind {kind!r}; expected one of {INPUT_KINDS}")


def _propagate(a_t: np.ndarray, f: np.ndarray, n_a: int) -> np.ndarray:
    """x_k = sum_j a_t[j, k] x_{k-j} + f_k from zero initial state."""
    N = f.size
    fl = f.tolist()
    x = [0.0] * (N + n_a)
    if n_a == 1:
        a1 = a_t[0].tolist()
        prev = 0.0
        for k in range(N):
            prev = a1[k] * prev + fl[k]
            x[k + 1] = prev
    else:
        cols = [a_t[j].tolist() for j in range(n_a)]
        for k in range(N):
            acc = fl[k]
            pos = k + n_a
            for j in range(n_a):
                acc += cols[j][k] * x[pos - j - 1]
            x[pos] = acc
    return np.array(x)


def simulate(model: SarModel, P: TransitionMatrix, noise: NoiseSpec, N: int, seed=0,
             L: float = DEFAULT_STATE_BOUND, input_kind: str = "uniform",
             u=None, init=None) -> Dataset:
    """Simulate ``N`` steps and return a dataset carrying full ground truth.

    The state starts at rest (``x_k = 0`` for ``k <= 0``).  ``u`` overrides the
    generated input and must then cover ``k = -n_c+1 .. N-1``.
    """
    if P.n != model.n:
        raise ValueError("transition matrix and model disagree on the number of modes")
    if N < 1:
        raise ValueError("N must be >= 1")
    if not L > 0:
        raise ValueError("state bound L must be positive")
    n_a, n_c = model.n_a, model.n_c
    chain_rng, input_rng, noise_rng, _ = child_streams(seed)

    delta = sample_markov_chain(P, N, init, chain_rng)
    n_u = max(N + n_c - 1, 0)
    if u is not None:
        u = generate_input("custom", n_u, values=u)
    else:
        u = generate_input(input_kind, n_u, input_rng)

    mode = delta - 1
    ks = np.arange(1, N + 1)
    f = np.zeros(N)
    cmat = model.c
    for j in range(1, n_c + 1):
        f += cmat[mode, j - 1] * u[ks - j + n_c - 1]
    a_t = model.a[mode].T  # (n_a, N)
    x = _propagate(a_t, f, n_a)
    if not np.all(np.abs(x) <= L):
        k_bad = int(np.argmax(~(np.abs(x) <= L))) - n_a + 1
        raise UnstableSimulationError(f"|x_k| exceeded L={L:g} at k={k_bad}")

    eta = noise.sigma * noise_rng.standard_normal(N + n_a)
    y = x + eta
    truth = Truth(x, delta, eta, model, P, noise, None if isinstance(seed, np.random.Generator) else seed)
    return Dataset(u, y, n_a, n_c, truth)


def noise_to_output_ratio(ds: Dataset) -> float:
    """``max|eta| / max|y|`` over the stored record."""
    if ds.truth is None:
        raise ValueError("noise-to-output ratio needs the true noise sequence")
    num = float(np.max(np.abs(ds.truth.eta)))
    den = float(np.max(np.abs(ds.y)))
    if den == 0.0:
        return 0.0
    return num / den


def random_transition_matrix(n: int, seed=0) -> TransitionMatrix:
    """Rows drawn independently and uniformly from the probability simplex."""
    rng = make_rng(seed)
    p = rng.dirichlet(np.ones(n), size=n)
    p /= p.sum(axis=1, keepdims=True)
    return TransitionMatrix(p)
