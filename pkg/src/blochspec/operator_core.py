"""Fundamental systems, monodromy and the characteristic determinant.

The equation ``(-i)^n y^(n) + sum_{m<n} a_m(x) y^(m) = lam y`` is integrated
as a first-order system in the scaled state ``z_j = y^(j) / omega^j`` with
``omega ~ |lam|^(1/n)``, so every component is O(1) and a single relative
tolerance is meaningful.

For large ``|lam|`` the monodromy matrix has entries of size ``exp(|lam|^(1/n))``
and ``det(Y(1) - rho I)`` formed from it loses all digits. The determinant is
therefore evaluated by multiple shooting: ``[0, 1]`` is split into segments
with bounded growth and the block-cyclic matrix

    [ F_0  -I              ]
    [      F_1  -I         ]
    [            ...   -I  ]
    [ -rho I          F_S-1]

whose determinant equals ``det(F_S-1 ... F_0 - rho I)`` exactly, is factored
with partial pivoting instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coefficients import OperatorSpec, PeriodicFunction, derivative
from .errors import ConfigurationError
from .integrate import IntegrationStats, integrate

MAX_ORDER = 12
DEFAULT_TOL = 1e-10
SEGMENT_GROWTH = 2.5  # target log-growth per shooting segment
MAX_BATCH_ELEMENTS = 1_500_000


@dataclass(frozen=True)
class CompanionSystem:
    """``(-i)^n y^(n) + sum_{m=0}^{n-1} coeffs[m](x) y^(m) = lam y``."""

    n: int
    coeffs: tuple
    adjoint: bool = False

    def __post_init__(self):
        if self.n > MAX_ORDER:
            raise ConfigurationError(f"order {self.n} exceeds supported cap {MAX_ORDER}")
        idx, amp = [], []
        for a in self.coeffs:
            idx.append(a.indices.astype(float))
            amp.append(a.amplitudes)
        object.__setattr__(self, "_idx", idx)
        object.__setattr__(self, "_amp", amp)

    @classmethod
    def direct(cls, spec: OperatorSpec, eps: float = 1.0) -> "CompanionSystem":
        n = spec.n
        coeffs = [PeriodicFunction.zero() for _ in range(n)]
        coeffs[n - 1] = PeriodicFunction.constant(spec.c)
        for v in range(2, n + 1):
            coeffs[n - v] = spec.p(v).scale(eps)
        return cls(n, tuple(coeffs), adjoint=False)

    @classmethod
    def formal_adjoint(cls, spec: OperatorSpec, eps: float = 1.0) -> "CompanionSystem":
        """Leibniz expansion of ``sum_k (-1)^k (conj(a_k) z)^(k)``."""
        direct = cls.direct(spec, eps)
        n = spec.n
        coeffs = []
        for m in range(n):
            acc = PeriodicFunction.zero()
            for k in range(m, n):
                ak = direct.coeffs[k]
                if ak.is_zero:
                    continue
                term = derivative(ak.conj(), k - m).scale((-1) ** k * math.comb(k, m))
                acc = acc + term
            coeffs.append(acc)
        return cls(n, tuple(coeffs), adjoint=True)

    def coefficient_values(self, x) -> np.ndarray:
        """Array of shape ``(n,) + x.shape``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.n,) + x.shape, dtype=complex)
        for m in range(self.n):
            if self._idx[m].size:
                out[m] = np.exp(2j * np.pi * np.multiply.outer(x, self._idx[m])) @ self._amp[m]
        return out

    def matrix(self, x: float, lam: complex) -> np.ndarray:
        """Companion matrix for the unscaled state ``(y, y', ..., y^(n-1))``."""
        n = self.n
        A = np.zeros((n, n), dtype=complex)
        A[np.arange(n - 1), np.arange(1, n)] = 1.0
        a = self.coefficient_values(np.array([x]))[:, 0]
        A[n - 1, :] = (1j) ** n * (-a)
        A[n - 1, 0] += (1j) ** n * lam
        return A

    def trace_integral(self) -> complex:
        """``int_0^1 trace A(x) dx`` (Liouville exponent)."""
        return -(1j) ** self.n * self.coeffs[self.n - 1].coefficient(0)

    def growth_bound(self, lam_abs: float) -> float:
        n = self.n
        g = max(lam_abs, 0.0) ** (1.0 / n)
        for m, a in enumerate(self.coeffs):
            g += a.sup_bound() ** (1.0 / (n - m))
        return g

    def omega(self, lam_abs: float) -> float:
        return max(1.0, max(lam_abs, 0.0) ** (1.0 / self.n))


def segment_count(system: CompanionSystem, lam_abs: float) -> int:
    return max(2, int(math.ceil(system.growth_bound(lam_abs) / SEGMENT_GROWTH)))


def _rhs_factory(system: CompanionSystem, lams: np.ndarray, x0: np.ndarray, omega: float):
    n = system.n
    wpow = omega ** np.arange(n)
    lam_scaled = lams[:, None, None] / omega ** (n - 1)
    lead = (1j) ** n / omega ** (n - 1)
    ipow = (1j) ** n

    def rhs(tau, z):
        a = system.coefficient_values(x0 + tau) * wpow[:, None]  # (n, S)
        dz = np.empty_like(z)
        dz[..., : n - 1, :] = omega * z[..., 1:, :]
        mix = np.einsum("ms,lsmc->lsc", a, z)
        dz[..., n - 1, :] = ipow * lam_scaled * z[..., 0, :] - lead * mix
        return dz

    return rhs


@dataclass
class Propagators:
    """Scaled segment propagators ``F[l, s]`` for ``lams[l]`` on ``[x_s, x_s+1]``."""

    lams: np.ndarray
    F: np.ndarray  # (L, S, n, n) in scaled variables
    omega: float
    stats: IntegrationStats

    @property
    def n(self) -> int:
        return self.F.shape[-1]

    @property
    def segments(self) -> int:
        return self.F.shape[1]

    def scaling(self) -> np.ndarray:
        return self.omega ** np.arange(self.n)


def propagate_segments(system: CompanionSystem, lams, segments: int,
                       tol: float = DEFAULT_TOL, omega: float | None = None) -> Propagators:
    """Integrate identity initial data across each of ``segments`` equal pieces.

    All ``lams`` share one step sequence unless the batch must be chunked
    for memory reasons.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = system.n
    if omega is None:
        omega = system.omega(float(np.max(np.abs(lams))) if lams.size else 0.0)
    S = int(segments)
    x0 = np.arange(S) / S
    per_lam = S * n * n
    chunk = max(1, MAX_BATCH_ELEMENTS // per_lam)
    out = np.empty((lams.size, S, n, n), dtype=complex)
    stats = IntegrationStats(rtol=tol)
    for start in range(0, lams.size, chunk):
        part = lams[start:start + chunk]
        y0 = np.broadcast_to(np.eye(n, dtype=complex), (part.size, S, n, n)).copy()
        rhs = _rhs_factory(system, part, x0, omega)
        y, st = integrate(rhs, y0, 1.0 / S, rtol=tol)
        out[start:start + chunk] = y
        stats.steps += st.steps
        stats.rejected += st.rejected
        stats.max_error = max(stats.max_error, st.max_error)
    return Propagators(lams=lams, F=out, omega=omega, stats=stats)


def block_matrix(F: np.ndarray, rho: complex) -> np.ndarray:
    """Block-cyclic shooting matrix for propagators ``F`` of shape (..., S, n, n)."""
    S, n = F.shape[-3], F.shape[-1]
    lead = F.shape[:-3]
    B = np.zeros(lead + (S * n, S * n), dtype=complex)
    eye = np.eye(n)
    for s in range(S):
        r = slice(s * n, (s + 1) * n)
        B[..., r, r] = F[..., s, :, :]
        if s < S - 1:
            B[..., r, (s + 1) * n:(s + 2) * n] = -eye
        else:
            B[..., r, 0:n] = -rho * eye
    return B


def block_det(F: np.ndarray, rho: complex) -> np.ndarray:
    return np.linalg.det(block_matrix(F, rho))


def monodromy(props: Propagators) -> np.ndarray:
    """Product of segment propagators in unscaled variables, shape (L, n, n)."""
    L, S, n, _ = props.F.shape
    M = np.broadcast_to(np.eye(n, dtype=complex), (L, n, n)).copy()
    for s in range(S):
        M = props.F[:, s] @ M
    D = props.scaling()
    return M * D[None, :, None] / D[None, None, :]


@dataclass
class FundamentalMatrix:
    lam: complex
    Y: np.ndarray
    tolerance: float
    steps: int
    segments: int
    adjoint: bool = False


def _check_tol(tol):
    if not tol > 0:
        raise ConfigurationError("integration tolerance must be positive")


def integrate_fundamental(spec: OperatorSpec, lam: complex, eps: float = 1.0,
                          tol: float = DEFAULT_TOL) -> FundamentalMatrix:
    """``Y[nu, j] = y_j^(nu)(1, lam)`` for ``L_{t,eps}`` with canonical data at 0."""
    _check_tol(tol)
    system = CompanionSystem.direct(spec, eps)
    props = propagate_segments(system, [lam], segment_count(system, abs(lam)), tol)
    return FundamentalMatrix(complex(lam), monodromy(props)[0],
                             props.stats.achieved_tolerance, props.stats.steps,
                             props.segments)


def integrate_adjoint(spec: OperatorSpec, lam: complex, tol: float = DEFAULT_TOL,
                      eps: float = 1.0) -> FundamentalMatrix:
    """Fundamental matrix of the formal adjoint at spectral parameter ``conj(lam)``."""
    _check_tol(tol)
    system = CompanionSystem.formal_adjoint(spec, eps)
    mu = np.conj(lam)
    props = propagate_segments(system, [mu], segment_count(system, abs(mu)), tol)
    return FundamentalMatrix(complex(mu), monodromy(props)[0],
                             props.stats.achieved_tolerance, props.stats.steps,
                             props.segments, adjoint=True)


def multiplier(t: float) -> complex:
    return complex(np.exp(1j * np.pi * t))


def characteristic_values(system: CompanionSystem, lams, t: float,
                          tol: float = DEFAULT_TOL, segments: int | None = None) -> np.ndarray:
    """Vectorised ``Delta(lam, t) = det(Y(1, lam) - exp(i pi t) I)``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if segments is None:
        segments = segment_count(system, float(np.max(np.abs(lams))))
    props = propagate_segments(system, lams, segments, tol)
    return block_det(props.F, multiplier(t))


def characteristic(spec: OperatorSpec, lam: complex, t: float, eps: float = 1.0,
                   tol: float = DEFAULT_TOL) -> complex:
    _check_tol(tol)
    system = CompanionSystem.direct(spec, eps)
    return complex(characteristic_values(system, [lam], t, tol)[0])


def characteristic_with_error(spec: OperatorSpec, lam: complex, t: float,
                              eps: float = 1.0, tol: float = DEFAULT_TOL):
    """``(Delta, error_estimate)`` with the estimate from a 16x tighter solve."""
    system = CompanionSystem.direct(spec, eps)
    S = segment_count(system, abs(lam))
    coarse = characteristic_values(system, [lam], t, tol, S)[0]
    fine = characteristic_values(system, [lam], t, tol / 16, S)[0]
    err = 1.5 * abs(coarse - fine) + 1e-13 * abs(coarse)
    return complex(coarse), float(err)


def free_characteristic(spec: OperatorSpec, lam, t: float) -> np.ndarray:
    """Closed form of Delta for ``eps = 0``: ``prod_j (exp(r_j) - rho)`` with
    ``(-i)^n r^n + c r^(n-1) = lam``."""
    lams = np.atleast_1d(np.asarray(lam, dtype=complex))
    n = spec.n
    rho = multiplier(t)
    # roots of r^n + c i^n r^(n-1) - i^n lam = 0 as companion eigenvalues
    comp = np.zeros(lams.shape + (n, n), dtype=complex)
    comp[..., np.arange(1, n), np.arange(n - 1)] = 1.0
    comp[..., 0, 0] = -spec.c * (1j) ** n
    comp[..., 0, n - 1] = (1j) ** n * lams
    roots = np.linalg.eigvals(comp)
    return np.prod(np.exp(roots) - rho, axis=-1)


def concomitant(spec: OperatorSpec, x, y_states, z_states, eps: float = 1.0) -> np.ndarray:
    """Lagrange bilinear form ``[y, z](x)`` of the direct expression.

    ``y_states``/``z_states`` hold ``(y, y', ..., y^(n-1))`` along ``x``
    (shape ``(n, len(x))``). For a direct solution at ``lam`` and an adjoint
    solution at ``conj(lam)`` the form is constant in ``x``.
    """
    system = CompanionSystem.direct(spec, eps)
    n = spec.n
    x = np.asarray(x, dtype=float)
    coeffs = list(system.coeffs) + [PeriodicFunction.constant((-1j) ** n)]
    total = np.zeros(x.shape, dtype=complex)
    zc = np.conj(z_states)
    for k in range(1, n + 1):
        ak = coeffs[k]
        if ak.is_zero:
            continue
        for j in range(k):
            d = np.zeros(x.shape, dtype=complex)
            for i in range(j + 1):
                d += math.comb(j, i) * derivative(ak, j - i)(x) * zc[i]
            total += (-1) ** j * y_states[k - 1 - j] * d
    return total


def null_states(props: Propagators, rho: complex, fine_per_coarse: int):
    """Null vector of the shooting matrix, expanded onto all fine nodes.

    ``props`` holds ``S * fine_per_coarse`` fine segments of a single ``lam``.
    Coarse propagators (products of ``fine_per_coarse`` fine ones) form the
    block matrix; its smallest right singular vector gives the states at the
    coarse nodes, which are then carried across each coarse segment with the
    fine propagators. Returns ``(states, singular_values)``; ``states`` has
    shape ``(n, M + 1)`` in unscaled variables and singular values ascend.
    """
    F = props.F[0]
    M, n = F.shape[0], F.shape[-1]
    q = fine_per_coarse
    S = M // q
    coarse = np.empty((S, n, n), dtype=complex)
    for s in range(S):
        P = np.eye(n, dtype=complex)
        for j in range(q):
            P = F[s * q + j] @ P
        coarse[s] = P
    B = block_matrix(coarse, rho)
    _, sv, vh = scipy.linalg.svd(B)
    u = np.conj(vh[-1]).reshape(S, n)
    z = np.empty((M + 1, n), dtype=complex)
    for s in range(S):
        z[s * q] = u[s]
        for j in range(q):
            z[s * q + j + 1] = F[s * q + j] @ z[s * q + j]
    D = props.scaling()
    return (z * D[None, :]).T, sv[::-1]
