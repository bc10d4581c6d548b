"""Directions from the Gaussian surface measure.

Draw directions for a few reference families, look at how often the shell
accepts a proposal, and see where the directions put their mass.
"""

import numpy as np

from swlab import GaussianReference, direction_second_moments, sample_directions, shell_refinement

d = 16
for ref in (GaussianReference.isotropic(d), GaussianReference.poly(1.0, d), GaussianReference.geom(0.6, d)):
    dirs = sample_directions(ref, 20_000, seed=1)
    c, _ = direction_second_moments(ref, dirs=dirs)
    print(f"{ref.family:>10}: acceptance {dirs.acceptance_rate:.3f}, "
          f"E<theta,e_1>^2 = {c[0]:.3f}, E<theta,e_{d}>^2 = {c[-1]:.4f}")

# An isotropic reference reproduces the uniform sphere: E theta_1^2 = 1/d.
print(f"\nisotropic reference, 1/d = {1 / d:.4f}")

# Halving the shell width changes the estimate by much less than its noise.
ref = GaussianReference.poly(1.0, d)
r = shell_refinement(ref, lambda x: np.abs(x[:, 0]), eps=0.05, k=50_000, seed=2)
print(f"E|theta_1| at eps=0.05: {r.coarse:.4f}, at eps=0.025: {r.fine:.4f} (combined SE {r.combined_se:.4f})")
