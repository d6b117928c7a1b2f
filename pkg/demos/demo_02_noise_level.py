"""
Finding the noise level from the data alone
===========================================

On clean data the Veronese-lifted regressors satisfy one exact linear
relation, so their second-moment matrix is singular.  Noise breaks that, but
correcting each output power with its unbiased polynomial restores it at the
right noise level.  Scanning the smallest singular value over sigma finds
that level.
"""

import numpy as np

from sarjump import (MomentStatistics, NoiseSpec, SarModel, TransitionMatrix, estimate_sigma,
                     simulate, veronese_spec)

model = SarModel.from_coefficients([[0.3], [-0.5]], [[1.0], [-1.0]])
ptm = TransitionMatrix([[0.4286, 0.5714], [0.1412, 0.8588]])
ds = simulate(model, ptm, NoiseSpec(0.03), 10**6, seed=1, input_kind="gaussian")
spec = veronese_spec(n=2, n_a=1, n_c=1)
print(f"lifted dimension: {spec.dim}")

# %%
# One pass over the data; every sigma after that is a 6x6 SVD.
stats = MomentStatistics.from_dataset(ds, spec)
for sigma in np.linspace(0.0, 0.3, 13):
    sv = np.linalg.svd(stats.corrected(sigma), compute_uv=False)
    print(f"sigma = {sigma:.3f}   smallest singular value = {sv[-1]:.3e}")

# %%
est = estimate_sigma(ds, spec, stats=stats)
print(f"\nsigma* = {est.sigma:.4f} (true {np.sqrt(0.03):.4f}), status {est.status}")
print(f"epsilon = {est.epsilon:.3e} (default rule: {est.epsilon_default})")
