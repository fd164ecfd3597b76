"""Bands of free operators and how they glue into one curve on the line.

Run: python demos/free_bands.py
"""
# %%
import numpy as np

from blochspec import OperatorSpec, glue_bands, track_bands
from blochspec.band_tracker import default_t_grid

# %% [markdown]
# For ``(-i)^3 y''' = lam y`` every fibre has eigenvalues ``(2 pi k + pi t)^3``.
# The continued branches reproduce them and meet end to end at ``t = +-1``.

# %%
spec = OperatorSpec.build(3)
ts = default_t_grid(11)
bands = track_bands(spec, range(-2, 3), ts)
for k, band in bands.items():
    exact = (2 * np.pi * k + np.pi * ts) ** 3
    err = np.max(np.abs(band.lam - exact) / np.abs(exact))
    print(f"k={k:+d}  lambda_k(1)={band.lam[-1].real:12.4f}  max rel. error {err:.1e}")

# %%
glob = glue_bands(bands)
for k, left, right, res in glob.junctions:
    print(f"junction {k:+d}->{k + 1:+d}: {left.real:12.4f} vs {right.real:12.4f}  residual {res:.1e}")

# %% [markdown]
# The glued band is the single analytic curve ``(pi t)^3`` on the real line
# (checked at shifted grid nodes; in between, samples are interpolated linearly).

# %%
for t in (ts[1] - 4, ts[4] - 2, ts[6], ts[8] + 2):
    print(f"t={t:+.1f}  band={glob(t).real:12.4f}  (pi t)^3={(np.pi * t) ** 3:12.4f}")
