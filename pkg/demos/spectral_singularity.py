"""A non-certified potential: projection norms near a double eigenvalue.

Run: python demos/spectral_singularity.py
"""
# %%
import warnings

import numpy as np

from blochspec import OperatorSpec, eigenpair, mu, simplicity_report

# %% [markdown]
# For ``-y'' + e^{i2pi x} y`` the eigenvalues coincide with the free ones,
# ``(2 pi k + pi t)^2``, so ``k = 1`` and ``k = -1`` collide at ``t = 0``.
# The eigenvalues stay simple for ``t != 0`` but the biorthogonal
# normalisation ``alpha_1(t)`` shrinks as ``t -> 0``.

# %%
spec = OperatorSpec.build(2, 0.0, p2={1: 1.0})
print(f"{'t':>8} {'lambda_1':>12} {'1/|alpha_1|':>14}")
for t in (0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pair = eigenpair(spec, t, 1.0, mu(spec, 1, t), k=1, method="fourier")
    print(f"{t:8.0e} {pair.lam.real:12.6f} {pair.projection_norm:14.6g}")

# %% [markdown]
# For unit amplitude the growth only sets in once ``t`` is well below
# ``1 / (32 pi^4) ~ 3e-4``: the norm behaves like
# ``sqrt(1 + (1 / (32 pi^4 t))^2)``.

# %%
for t in (1e-3, 1e-5):
    print(f"t={t:.0e}: series prediction {np.hypot(1.0, 1 / (32 * np.pi ** 4 * t)):.6g}")

# %%
report = simplicity_report(spec, [0.0, 0.25], 3)
print(f"min separation at t=0: {report.gaps[0]:.2e}; at t=0.25: {report.gaps[1]:.3f}")
