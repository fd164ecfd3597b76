"""Bloch eigenfunction expansion of compactly supported functions on the line.

For ``f`` supported on a bounded interval,

    a_k(t) = (1 / alpha_k(t)) * integral f(x) conj(Psi*_{k,t}(x)) dx
    f(x)  ~ 1/2 * sum_k integral_{(-1,1]} a_k(t) Psi_{k,t}(x) dt

with ``Psi`` extended to the line by ``Psi(x + 1) = exp(i pi t) Psi(x)``.
Eigenfunctions are finite exponential sums in ``exp(i (2 pi j + pi t) x)``,
so the line integral reduces to Fourier moments ``F(xi) = int f(x) exp(-i xi x) dx``
at ``xi = 2 pi j + pi t``.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bloch_solver import ALPHA_FLOOR, Eigenpair
from .coefficients import OperatorSpec, certify
from .errors import ConfigurationError
from .hill import default_truncation, hill_spectrum
from .operator_core import multiplier

PANEL_NODES = 32
LARGE_PROJECTION = 1e3


@dataclass(frozen=True)
class TestFunction:
    """``f`` vanishing outside ``[x0, x1]``; ``transform(xi)`` is optional."""

    __test__ = False  # not a pytest class

    x0: float
    x1: float
    func: Callable
    transform: Callable | None = None
    name: str = "f"

    def __post_init__(self):
        if not (math.isfinite(self.x0) and math.isfinite(self.x1) and self.x1 > self.x0):
            raise ConfigurationError("support must be a finite nonempty interval")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.x0) & (x <= self.x1)
        out = np.zeros(x.shape, dtype=complex)
        out[inside] = self.func(x[inside])
        return out

    @classmethod
    def raised_cosine(cls, x0: float = 0.0, x1: float = 3.0) -> "TestFunction":
        """``(1 - cos(2 pi (x - x0) / L)) / 2`` on ``[x0, x1]``, ``L = x1 - x0``."""
        L = x1 - x0
        beta = 2 * np.pi / L

        def func(x):
            return 0.5 * (1.0 - np.cos(beta * (x - x0)))

        def box(w):
            # int_0^L exp(-i w x) dx
            return L * np.exp(-0.5j * w * L) * np.sinc(w * L / (2 * np.pi))

        def transform(xi):
            xi = np.asarray(xi, dtype=float)
            shift = np.exp(-1j * xi * x0)
            return shift * (0.5 * box(xi) - 0.25 * box(xi - beta) - 0.25 * box(xi + beta))

        return cls(x0, x1, func, transform, name="raised_cosine")

    @classmethod
    def from_samples(cls, x, values) -> "TestFunction":
        """Piecewise-linear interpolant of samples; support is the sample range."""
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=complex)

        def func(s):
            return np.interp(s, x, values.real) + 1j * np.interp(s, x, values.imag)

        return cls(float(x[0]), float(x[-1]), func, None, name="samples")

    def quadrature(self, panels_per_unit: int = 8, nodes: int = PANEL_NODES):
        """Composite Gauss-Legendre nodes and weights on the support."""
        count = max(1, int(math.ceil((self.x1 - self.x0) * panels_per_unit)))
        edges = np.linspace(self.x0, self.x1, count + 1)
        g, w = np.polynomial.legendre.leggauss(nodes)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * g[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return x, weights

    def moments(self, xi) -> np.ndarray:
        """``int f(x) exp(-i xi x) dx``, closed form when available."""
        xi = np.asarray(xi, dtype=float)
        if self.transform is not None:
            return np.asarray(self.transform(xi), dtype=complex)
        # enough panels to resolve the fastest oscillation
        per_unit = max(8, int(math.ceil(np.max(np.abs(xi), initial=0.0) / (2 * np.pi) / 4)))
        x, w = self.quadrature(per_unit)
        return np.exp(-1j * np.multiply.outer(xi, x)) @ (w * self(x))

    def l2_norm(self) -> float:
        x, w = self.quadrature()
        return float(np.sqrt(np.sum(w * np.abs(self(x)) ** 2)))


def extend_eigenfunction(psi: Callable, t: float, x) -> np.ndarray:
    """``Psi(x) = exp(i pi t floor(x)) Psi(x - floor(x))`` for ``Psi`` given on ``[0, 1)``."""
    x = np.asarray(x, dtype=float)
    m = np.floor(x)
    return multiplier(t) ** m * psi(x - m)


def expansion_coefficient(f: TestFunction, pair: Eigenpair, panels_per_unit: int = 16) -> complex:
    """``(1 / alpha) int f conj(Psi*)`` by quadrature over the support of ``f``."""
    x, w = f.quadrature(panels_per_unit)

    def adj(s):
        return pair.evaluate(s, adjoint=True)

    value = np.sum(w * f(x) * np.conj(extend_eigenfunction(adj, pair.t, x)))
    if abs(pair.alpha) < ALPHA_FLOOR:
        warnings.warn("expansion coefficient at a near-degenerate eigenvalue", RuntimeWarning,
                      stacklevel=2)
    return complex(value / pair.alpha)


@dataclass
class ExpansionResult:
    K: int
    nodes: np.ndarray
    weights: np.ndarray
    coefficients: np.ndarray  # (2K + 1, len(nodes)), rows k = -K..K
    alpha: np.ndarray  # same shape
    x: np.ndarray
    f: np.ndarray
    fhat: np.ndarray
    l2_error: float
    max_projection_norm: float
    flagged: bool = False
    per_k_energy: np.ndarray = field(default=None)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def energy(self) -> float:
        return float(np.sum(self.per_k_energy))

    def to_dict(self) -> dict:
        return {"K": self.K, "nodes": self.nodes.tolist(),
                "per_k_energy": self.per_k_energy.tolist(), "l2_error": self.l2_error}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "re_f", "im_f", "re_fhat", "im_fhat"])
            for x, a, b in zip(self.x, self.f, self.fhat):
                writer.writerow([repr(float(x)), repr(a.real), repr(a.imag),
                                 repr(b.real), repr(b.imag)])


def expansion_admissible(spec: OperatorSpec) -> bool:
    """Free operators and certified specs admit the expansion."""
    if spec.is_free:
        return True
    try:
        return certify(spec).satisfied
    except ConfigurationError:
        return False


def _bloch_basis(spec, t, K, eps, K_hill):
    """Right/left coefficient vectors (columns) and ``alpha`` for ``k = -K..K``."""
    ks = np.arange(-K, K + 1)
    _, vr, vl, KH = hill_spectrum(spec, t, ks, eps, K_hill=K_hill, vectors=True)
    vr = vr / np.linalg.norm(vr, axis=0)
    vl = vl / np.linalg.norm(vl, axis=0)
    alpha = np.sum(vr * np.conj(vl), axis=0)
    return vr, vl, alpha, KH


def reconstruct(f: TestFunction, spec: OperatorSpec, K: int = 64, t_nodes: int = 128,
                eps: float = 1.0, window=None, samples: int = 2001,
                allow_uncertified: bool = False, K_hill: int | None = None) -> ExpansionResult:
    """Truncated expansion ``1/2 sum_{|k|<=K} sum_j w_j a_k(t_j) Psi_{k,t_j}(x)``.

    ``t_nodes`` Gauss-Legendre nodes on ``(-1, 1)``. The relative L2 error is
    measured on ``window`` (default: the support widened by one period on
    each side) with ``samples`` equispaced points.
    """
    if not allow_uncertified and not expansion_admissible(spec):
        raise ConfigurationError("expansion requires a certified (or free) spec")
    if K < 0 or t_nodes < 1:
        raise ConfigurationError("K must be >= 0 and t_nodes >= 1")
    if window is None:
        window = (f.x0 - 1.0, f.x1 + 1.0)
    if K_hill is None:
        K_hill = default_truncation(K)
    nodes, weights = np.polynomial.legendre.leggauss(t_nodes)
    x = np.linspace(window[0], window[1], samples)
    fhat = np.zeros(samples, dtype=complex)
    coeffs = np.empty((2 * K + 1, t_nodes), dtype=complex)
    alphas = np.empty_like(coeffs)
    for j, (t, w) in enumerate(zip(nodes, weights)):
        vr, vl, alpha, KH = _bloch_basis(spec, t, K, eps, K_hill)
        wave = 2 * np.pi * np.arange(-KH, KH + 1) + np.pi * t
        F = f.moments(wave)
        a = (np.conj(vl).T @ F) / alpha
        coeffs[:, j], alphas[:, j] = a, alpha
        field_coef = vr @ a  # sum_k a_k Psi_k in the exponential basis
        fhat += 0.5 * w * (np.exp(1j * np.multiply.outer(x, wave)) @ field_coef)
    fx = f(x)
    norm = _l2(fx, x)
    err = _l2(fx - fhat, x) / norm if norm > 0 else 0.0
    proj = 1.0 / np.abs(alphas)
    energy = 0.5 * np.sum(weights[None, :] * np.abs(alphas * coeffs) ** 2, axis=1)
    flagged = bool(np.max(proj) > LARGE_PROJECTION)
    if flagged:
        warnings.warn("large projection norms in the expansion", RuntimeWarning, stacklevel=2)
    return ExpansionResult(K=K, nodes=nodes, weights=weights, coefficients=coeffs, alpha=alphas,
                           x=x, f=fx, fhat=fhat, l2_error=float(err),
                           max_projection_norm=float(np.max(proj)), flagged=flagged,
                           per_k_energy=energy)


def _l2(values, x):
    return float(np.sqrt(np.trapezoid(np.abs(values) ** 2, x)))
