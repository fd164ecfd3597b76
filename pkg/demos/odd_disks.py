"""Localisation disks for a certified third-order operator.

Run: python demos/odd_disks.py
"""
# %%
import numpy as np

from blochspec import OperatorSpec, certify, count_eigenvalues, disk, spectrum

# %% [markdown]
# A single harmonic ``p3 = 0.5 exp(i 2 pi x)`` is triangular in the
# exponential basis and leaves the eigenvalues unchanged. Adding
# ``0.4 i exp(-i 2 pi x)`` couples neighbouring modes; ``C`` stays well inside
# the odd-order threshold, so each eigenvalue still sits alone in its disk.

# %%
spec = OperatorSpec.build(3, p3={1: 0.5, -1: 0.4j})
cert = certify(spec)
print(f"C = {cert.C:.4f}, threshold = {cert.threshold:.4f}, satisfied: {cert.satisfied}")

# %%
t = 0.35
s = spectrum(spec, t, range(-3, 4))
print(f"{'k':>3} {'lambda':>28} {'centre':>12} {'radius':>9} {'count':>6}")
for k, lam in zip(s.ks, s.lam):
    d = disk(spec, int(k), t)
    n = count_eigenvalues(spec, t, 1.0, d.circle())
    print(f"{k:>3} {lam.real:14.5f}{lam.imag:+13.5f}i {d.center.real:12.4f} {d.radius:9.4f} {n:6d}")

# %% [markdown]
# The complex potential moves the eigenvalues away from the centres, but
# never by more than the disk radius.

# %%
shift = [abs(lam - disk(spec, int(k), t).center) / disk(spec, int(k), t).radius
         for k, lam in zip(s.ks, s.lam)]
print("largest shift / radius:", f"{max(shift):.3f}")
