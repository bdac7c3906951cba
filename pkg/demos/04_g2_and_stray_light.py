"""
How much stray light does a measured g2 imply?
===============================================

With excitation probability p and no background the cross-correlation is
1 + 1/p (about 2000 for p = 5e-4).  A measured value near 75 therefore points
to substantial uncorrelated light.  We invert the model for the background,
check the estimator on simulated trials, and see what that background does
to the coincidence table.

    python demos/04_g2_and_stray_light.py
"""

import numpy as np

from qutrit_oam.measurement import projector_set
from qutrit_oam.simulation import (
    DEFAULT_ETA,
    SourceModel,
    expected_counts,
    g2_estimate,
    g2_invert,
    g2_model,
    benchmark_state,
)

p = 5e-4
print(f"ideal g2 at p = {p}: {g2_model(p, DEFAULT_ETA, 0, 0):.1f}")

for symmetric in (True, False):
    bs, ba = g2_invert(74.6, p, DEFAULT_ETA, symmetric)
    label = "equal on both arms" if symmetric else "Stokes arm only"
    print(f"g2 = 74.6 needs background {label}: bg_s = {bs:.3e}, bg_as = {ba:.3e} per pulse "
          f"(round trip {g2_model(p, DEFAULT_ETA, bs, ba):.9f})")

# g2 falls monotonically as the background grows.
for b in (0, 1e-6, 1e-5, 1e-4):
    print(f"  bg = {b:.0e}: g2 = {g2_model(p, DEFAULT_ETA, b, b):9.2f}")

# The counting estimator on Bernoulli trials from the same picture.
rng = np.random.default_rng(0)
n, eta, bs, ba = 5_000_000, 0.5, 2e-3, 1e-3
pair = rng.random(n) < p * 10
stokes = pair | (rng.random(n) < bs)
anti = (pair & (rng.random(n) < eta)) | (rng.random(n) < ba)
est = g2_estimate(int(stokes.sum()), int(anti.sum()), int((stokes & anti).sum()), n)
print(f"simulated g2 {est:.2f} vs model {g2_model(p * 10, eta, bs, ba):.2f}")

# Background fills in the settings that a pure state would leave dark.
settings = projector_set()
bs, ba = g2_invert(74.6, p, DEFAULT_ETA)
clean = expected_counts(SourceModel(benchmark_state()), settings)
noisy = expected_counts(SourceModel(benchmark_state(), bg_stokes=bs, bg_antistokes=ba), settings)
print(f"darkest setting: {clean.min():.1f} -> {noisy.min():.1f} counts; "
      f"total {clean.sum():.0f} -> {noisy.sum():.0f}")
