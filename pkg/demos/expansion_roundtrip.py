"""Expanding a compactly supported bump in Bloch eigenfunctions.

Run: python demos/expansion_roundtrip.py
"""
# %%
from blochspec import OperatorSpec, TestFunction, reconstruct

# %% [markdown]
# ``f`` is a raised cosine on ``[0, 3]``. Summing ``|k| <= K`` bands and
# integrating over ``t`` with Gauss-Legendre nodes recovers ``f``; the error
# falls quickly with ``K`` since ``f`` is smooth.

# %%
f = TestFunction.raised_cosine(0.0, 3.0)
for name, spec in [("free n=2", OperatorSpec.build(2)),
                   ("drift n=2", OperatorSpec.build(2, 1.0, p2={1: 0.9, -1: 0.9})),
                   ("odd n=3", OperatorSpec.build(3, p3={1: 0.5}))]:
    for K in (4, 8, 16, 32):
        res = reconstruct(f, spec, K=K, t_nodes=64)
        print(f"{name:10s} K={K:3d}  rel. L2 error {res.l2_error:.2e}  "
              f"energy {res.energy:.6f}  max 1/|alpha| {res.max_projection_norm:.4f}")
print(f"|f|^2 = {f.l2_norm() ** 2:.6f}")
