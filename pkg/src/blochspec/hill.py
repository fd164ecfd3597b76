"""Fourier-Galerkin (Hill) truncation of ``L_{t,eps}``.

In the orthonormal basis ``e_j(x) = exp(i (2 pi j + pi t) x)`` the fibre
operator is the matrix

    H[k, j] = mu_j(t, c) delta_kj + eps * sum_v a^(v)_{k-j} (i (2 pi j + pi t))^(n-v)

where ``a^(v)_m`` are the harmonics of ``p_v``. Its eigenvalues seed the
Newton refinement on the characteristic determinant; its right and left
eigenvectors give a second, independent route to ``Psi`` and ``Psi*``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .coefficients import OperatorSpec


def wavenumbers(t: float, K: int) -> np.ndarray:
    return 2 * np.pi * np.arange(-K, K + 1) + np.pi * t


def mu_values(spec: OperatorSpec, ks, t: float) -> np.ndarray:
    a = 2 * np.pi * np.asarray(ks, dtype=float) + np.pi * t
    n = spec.n
    return a.astype(complex) ** n + spec.c * (1j * a) ** (n - 1)


def hill_matrix(spec: OperatorSpec, t: float, K: int, eps: float = 1.0) -> np.ndarray:
    n = spec.n
    a = wavenumbers(t, K)
    size = 2 * K + 1
    H = np.diag(mu_values(spec, np.arange(-K, K + 1), t))
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]
    shift = rows - cols
    for v in range(2, n + 1):
        p = spec.p(v)
        if p.is_zero:
            continue
        factor = (1j * a) ** (n - v)
        for m, amp in p.harmonics.items():
            H = H + eps * amp * (shift == m) * factor[None, :]
    return H


def default_truncation(K: int) -> int:
    return K + max(16, K // 2)


def hill_spectrum(spec: OperatorSpec, t: float, ks, eps: float = 1.0, K_hill: int | None = None,
                  vectors: bool = False):
    """Hill eigenvalues assigned to band indices ``ks``.

    Assignment minimises ``sum |lam - mu_k|`` over eigenvalues of a larger
    truncation (Hungarian algorithm). With ``vectors=True`` the right and
    left eigenvectors (columns, basis indices ``-K_hill..K_hill``) are returned.
    """
    ks = np.asarray(ks, dtype=int)
    if K_hill is None:
        K_hill = default_truncation(int(np.max(np.abs(ks))))
    H = hill_matrix(spec, t, K_hill, eps)
    if vectors:
        w, vl, vr = scipy.linalg.eig(H, left=True, right=True)
    else:
        w = scipy.linalg.eigvals(H)
    mu = mu_values(spec, ks, t)
    cost = np.abs(mu[:, None] - w[None, :])
    row, col = linear_sum_assignment(cost)
    order = np.empty(ks.size, dtype=int)
    order[row] = col
    lam = w[order]
    if not vectors:
        return lam
    return lam, vr[:, order], vl[:, order], K_hill
