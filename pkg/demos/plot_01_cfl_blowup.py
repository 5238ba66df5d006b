"""
Explicit steps above the CFL limit
==================================

The explicit heat stencil on a 100x100 grid with h = 0.01 is stable only for
dt <= h^2 / 4 = 2.5e-5. Here the same star is advanced with 2e-5 and 6e-5.
"""

import numpy as np

from deepfcnn import EquationParams, TimeStepping, fdm_rollout, make_shape, stability_threshold, unit_square

grid = unit_square(100)
print("threshold:", stability_threshold(grid.h, 1.0))

f0 = make_shape("star", grid)

# %%
# All three equations, small and large step, up to t = 0.006
for kind in ("heat", "fisher", "allen_cahn"):
    eq = EquationParams.default(kind)
    small = fdm_rollout(f0, eq, TimeStepping(2e-5, 300, record_every=100))
    large = fdm_rollout(f0, eq, TimeStepping(6e-5, 100, record_every=10))
    print(f"{kind:>10}  dt=2e-5: max|phi|={np.abs(small.final.values).max():.4f}   "
          f"dt=6e-5: blow-up at step {large.blowup_step}")

# %%
# The growth of the checkerboard mode explains it: one step multiplies it by
# 1 - 8 dt / h^2, i.e. -0.6 for dt = 2e-5 and -3.8 for dt = 6e-5.
for dt in (2e-5, 6e-5):
    print(dt, 1 - 8 * dt / grid.h**2)
