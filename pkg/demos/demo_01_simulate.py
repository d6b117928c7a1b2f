"""
Simulating a Markov-switched autoregressive system
===================================================

Two first-order subsystems take turns driving the state, a Markov chain
decides which one is active, and every output sample is observed through
additive Gaussian noise.
"""

import numpy as np

from sarjump import NoiseSpec, SarModel, TransitionMatrix, noise_to_output_ratio, simulate

# %%
# x_k = a x_{k-1} + c u_{k-1}, with (a, c) = (0.3, 1) or (-0.5, -1)
model = SarModel.from_coefficients([[0.3], [-0.5]], [[1.0], [-1.0]])
ptm = TransitionMatrix([[0.1837, 0.8163], [0.3424, 0.6576]])

ds = simulate(model, ptm, NoiseSpec(0.01), 10**6, seed=0, input_kind="gaussian")
print(f"N = {ds.N}, regressor length s = {ds.s}")
print(f"noise-to-output ratio gamma = {noise_to_output_ratio(ds):.4f}")

# %%
# The mode path is a plain Markov chain: its transition frequencies
# approach the rows of the transition matrix.
delta = ds.truth.delta
counts = np.zeros((2, 2))
np.add.at(counts, (delta[:-1] - 1, delta[1:] - 1), 1)
print("empirical transitions:\n", np.round(counts / counts.sum(axis=1, keepdims=True), 4))

# %%
# Seeds are split into independent streams, so a shorter run is an exact
# prefix of a longer one.
short = simulate(model, ptm, NoiseSpec(0.01), 1000, seed=0, input_kind="gaussian")
print("prefix property holds:", np.array_equal(short.y, ds.truncate(1000).y))
