"""
Energy decay of Allen-Cahn from random noise
============================================

The discrete Ginzburg-Landau energy with eps = eps_m(h, 5) decreases along the
stable explicit run, and the solution stays inside [-1, 1].
"""

import numpy as np

from deepfcnn import EquationParams, TimeStepping, eps_m, fdm_rollout, random_uniform, unit_square
from deepfcnn.diagnostics import minmax_series, normalized_energy_series

grid = unit_square(100)
eq = EquationParams.default("allen_cahn")
eps = eps_m(grid.h, 5)
print(f"eps = {eps:.6f}, 1/eps^2 = {1 / eps**2:.1f} (beta = {eq.beta:g})")

traj = fdm_rollout(random_uniform(grid, 0), eq, TimeStepping(2e-5, 300, record_every=3))
energy = normalized_energy_series(traj, eps)
mm = minmax_series(traj)

for t, e, (lo, hi) in list(zip(traj.times, energy, mm))[::10]:
    print(f"t={t:.4f}  E/E0={e:.4f}  min={lo:+.4f}  max={hi:+.4f}")
print("monotone:", bool(np.all(np.diff(energy) <= 0)))

# %%
# Optional figure
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(traj.times, energy)
    ax1.set_xlabel("t")
    ax1.set_ylabel("E(t) / E(0)")
    ax2.plot(traj.times, mm[:, 1], label="max")
    ax2.plot(traj.times, mm[:, 0], label="min")
    ax2.legend()
    fig.tight_layout()
    fig.savefig("allen_cahn_energy.png", dpi=100)
