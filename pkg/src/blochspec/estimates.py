"""Elementary series and inequalities behind the Fourier-coefficient estimates."""

from __future__ import annotations

import math

import numpy as np


def odd_reciprocal_squares(N: int) -> float:
    """``sum_{m=1}^N 1 / (2m - 1)^2`` (limit ``pi^2 / 8``)."""
    m = np.arange(N, 0, -1, dtype=float)  # small terms first
    return math.fsum(1.0 / (2 * m - 1) ** 2)


def even_reciprocal_squares(N: int) -> float:
    """``sum_{m=1}^N 1 / (2m)^2`` (limit ``pi^2 / 24``)."""
    m = np.arange(N, 0, -1, dtype=float)
    return math.fsum(1.0 / (2 * m) ** 2)


def odd_tail_bounds(N: int) -> tuple:
    """Integral-test bounds on ``sum_{m>N} 1 / (2m - 1)^2``."""
    return 1.0 / (2 * (2 * N + 1)), 1.0 / (2 * (2 * N - 1))


def even_tail_bounds(N: int) -> tuple:
    """Integral-test bounds on ``sum_{m>N} 1 / (2m)^2``."""
    return 1.0 / (4 * (N + 1)), 1.0 / (4 * N)


def power_gap_admissible(a, b, n) -> np.ndarray:
    """Cases where ``|a^(n-1) - b^(n-1)| >= |a - b| |a|^(n-2)`` is claimed:
    ``a b >= 0`` (any ``n >= 2``), or ``|a| <= b`` with ``n`` even."""
    a, b, n = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(n))
    return (n >= 2) & ((a * b >= 0) | ((np.abs(a) <= b) & (n % 2 == 0)))


def power_gap_holds(a, b, n, rtol: float = 1e-12) -> np.ndarray:
    """Elementwise check of ``|a^(n-1) - b^(n-1)| >= |a - b| |a|^(n-2)`` up to rounding."""
    a, b, n = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(n))
    lhs = np.abs(a ** (n - 1) - b ** (n - 1))
    rhs = np.abs(a - b) * np.abs(a) ** (n - 2)
    scale = np.abs(a) ** (n - 1) + np.abs(b) ** (n - 1)
    return lhs >= rhs - rtol * scale


def sample_power_gap(count: int, rng: np.random.Generator, max_order: int = 12,
                     spread: float = 50.0):
    """Random admissible ``(a, b, n)``: half with ``a b >= 0``, half with ``|a| <= b``."""
    half = count // 2
    n1 = rng.integers(2, max_order + 1, size=half)
    mag = rng.uniform(0, spread, size=(2, half))
    sign = rng.choice([-1.0, 1.0], size=half)
    a1, b1 = sign * mag[0], sign * mag[1]
    rest = count - half
    n2 = 2 * rng.integers(1, max_order // 2 + 1, size=rest)
    b2 = rng.uniform(0, spread, size=rest)
    a2 = rng.uniform(-1, 1, size=rest) * b2
    return (np.concatenate([a1, a2]), np.concatenate([b1, b2]), np.concatenate([n1, n2]))
