"""Bloch eigenvalues, eigenfunctions and projection diagnostics of ``L_{t,eps}``.

Eigenvalues are seeded from the Hill truncation, refined by Newton's method
on the characteristic determinant and verified by argument-principle counts
on small circles. Eigenfunctions are built from the null vector of the
shooting matrix (``method="shooting"``) or from Hill eigenvectors
(``method="fourier"``).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coefficients import OperatorSpec, Regime, compute_C
from .contours import Circle, winding_numbers
from .errors import (BasinEscape, BlochError, ConfigurationError, NoConvergence,
                     NonSimpleEigenvalue)
from .hill import hill_spectrum, mu_values
from .operator_core import (DEFAULT_TOL, CompanionSystem, characteristic_values,
                            free_characteristic, multiplier, null_states,
                            propagate_segments, segment_count)

COUNT_TOL = 1e-8
REFINE_TOL = 1e-10
ALPHA_FLOOR = 1e-8
NULL_TOL = 1e-6
MIN_SAMPLES = 256


def mu(spec: OperatorSpec, k: int, t: float) -> complex:
    """Unperturbed eigenvalue ``(2 pi k + pi t)^n + c (i (2 pi k + pi t))^(n-1)``."""
    return complex(mu_values(spec, [k], t)[0])


def _P(n: int, k, t: float):
    k = np.asarray(k)
    return np.where(k != 0, np.abs(2 * np.pi * k + np.pi * t) ** (n - 2), np.pi ** (n - 2))


# -- disks --------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    k: int
    t: float
    center: complex
    radius: float

    def contains(self, z) -> bool:
        return abs(z - self.center) < self.radius

    def circle(self) -> Circle:
        return Circle(self.center, self.radius)


def disk(spec: OperatorSpec, k: int, t: float, C: float | None = None) -> Disk:
    """Localisation disk of the odd-order theory: centre ``(2 pi k + pi t)^n``,
    radius ``1.5 pi^(n-2) C |2k + t|^(n-2)``."""
    if spec.regime is not Regime.ODD:
        raise ConfigurationError("localisation disks are defined for odd order only")
    if C is None:
        C = compute_C(spec)
    n = spec.n
    center = complex((2 * np.pi * k + np.pi * t) ** n)
    radius = 1.5 * np.pi ** (n - 2) * C * abs(2 * k + t) ** (n - 2)
    return Disk(int(k), float(t), center, float(radius))


def disks_disjoint(disks) -> bool:
    """Closures pairwise disjoint (strict separation of boundaries)."""
    for i, a in enumerate(disks):
        for b in disks[i + 1:]:
            if abs(a.center - b.center) <= a.radius + b.radius:
                return False
    return True


# -- counting -------------------------------------------------------------------

def count_many(spec: OperatorSpec, t: float, eps: float, contours, tol: float = COUNT_TOL,
               start_nodes: int = 64, relative: bool = False) -> list:
    """Argument-principle counts of zeros of ``Delta(., t)`` inside each contour.

    With ``relative=True`` the winding of ``Delta / Delta_0`` is measured,
    where ``Delta_0`` is the closed-form determinant of the drift-only
    operator, and the exactly known number of ``mu_k`` inside is added back.
    The ratio tends to 1 away from the eigenvalues, so long contours need far
    fewer nodes.
    """
    system = CompanionSystem.direct(spec, eps)

    if relative:
        def evaluate(points):
            return characteristic_values(system, points, t, tol) / free_characteristic(
                spec, points, t)
    else:
        def evaluate(points):
            return characteristic_values(system, points, t, tol)

    counts = winding_numbers(evaluate, contours, start_nodes=start_nodes)
    if relative:
        counts = [w + unperturbed_inside(spec, t, c) for w, c in zip(counts, contours)]
    return counts


def unperturbed_inside(spec: OperatorSpec, t: float, contour) -> int:
    """Number of ``mu_k(t, c)`` strictly inside ``contour``."""
    # |mu_k| >= |2 pi k + pi t|^n, so larger |k| cannot lie inside
    reach = contour.max_modulus ** (1.0 / spec.n) / (2 * np.pi) + 2
    ks = np.arange(-int(reach) - 1, int(reach) + 2)
    return int(sum(contour.contains(m) for m in mu_values(spec, ks, t)))


def count_eigenvalues(spec: OperatorSpec, t: float, eps: float, contour,
                      tol: float = COUNT_TOL, start_nodes: int = 64,
                      relative: bool = False) -> int:
    return count_many(spec, t, eps, [contour], tol, start_nodes, relative)[0]


# -- refinement ---------------------------------------------------------------------

def _fd_step(lam):
    return np.maximum(1e-6, 1e-8 * np.abs(lam))


def _newton_values(system, lam, t, tol):
    h = _fd_step(lam)
    pts = np.concatenate([lam, lam + h, lam - h])
    vals = characteristic_values(system, pts, t, tol)
    L = lam.size
    f, fp, fm = vals[:L], vals[L:2 * L], vals[2 * L:]
    d = (fp - fm) / (2 * h)
    return f, d


@dataclass
class Refinement:
    lam: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    iterations: int


def refine_many(spec: OperatorSpec, t: float, eps: float, seeds, tol: float = REFINE_TOL,
                max_iter: int = 60, max_step=None, int_tol: float = DEFAULT_TOL) -> Refinement:
    """Damped Newton on ``Delta(., t)`` for several seeds at once.

    The residual is the normalised Newton correction
    ``|Delta / Delta'| / max(1, |lam|)``; iteration stops per root once it
    falls below ``tol``. ``max_step`` (scalar or per-seed) caps each update.
    """
    system = CompanionSystem.direct(spec, eps)
    lam = np.array(seeds, dtype=complex).ravel()
    L = lam.size
    converged = np.zeros(L, dtype=bool)
    residual = np.full(L, np.inf)
    prev = np.full(L, np.nan + 0j)
    prev_f = np.full(L, np.nan + 0j)
    cap = None if max_step is None else np.broadcast_to(np.asarray(max_step, float), (L,))
    it = 0
    for it in range(1, max_iter + 1):
        act = ~converged
        if not act.any():
            break
        f, d = _newton_values(system, lam[act], t, int_tol)
        bad = ~np.isfinite(d) | (d == 0)
        if bad.any():
            # secant fallback through the previous iterate
            pa, pf = prev[act], prev_f[act]
            sec = (f - pf) / (lam[act] - pa)
            d = np.where(bad & np.isfinite(sec) & (sec != 0), sec, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / d
        scale = np.maximum(1.0, np.abs(lam[act]))
        res = np.abs(step) / scale
        residual[act] = res
        ok = np.isfinite(step)
        if cap is not None:
            big = np.abs(step) > cap[act]
            step = np.where(big, step / np.abs(step) * cap[act], step)
        prev[act], prev_f[act] = lam[act], f
        new = lam[act] - np.where(ok, step, 0)
        lam[act] = new
        done = ok & (res <= tol)
        idx = np.nonzero(act)[0]
        converged[idx[done]] = True
    return Refinement(lam=lam, residual=residual, converged=converged, iterations=it)


def residuals(spec: OperatorSpec, t: float, eps: float, lams, int_tol: float = DEFAULT_TOL):
    """Normalised residual ``|Delta / Delta'| / max(1, |lam|)``."""
    system = CompanionSystem.direct(spec, eps)
    lam = np.atleast_1d(np.asarray(lams, dtype=complex))
    f, d = _newton_values(system, lam, t, int_tol)
    return np.abs(f / d) / np.maximum(1.0, np.abs(lam))


def verification_radius(lam: complex, others, tol: float = REFINE_TOL) -> float:
    others = np.asarray([o for o in np.atleast_1d(others) if o is not None], dtype=complex)
    floor = 1e3 * tol * max(1.0, abs(lam))
    if others.size == 0:
        return max(floor, 0.25 * max(1.0, abs(lam)))
    return max(floor, 0.25 * float(np.min(np.abs(others - lam))))


def refine_eigenvalue(spec: OperatorSpec, t: float, eps: float, seed: complex,
                      tol: float = REFINE_TOL, basin: float | None = None,
                      verify: bool = True) -> complex:
    """Newton refinement from ``seed``, verified by a count of 1 on a small circle.

    ``basin`` bounds ``|lam - seed|``; leaving it raises :class:`BasinEscape`.
    The verification radius is a quarter of the distance to the nearest
    unperturbed eigenvalue other than the closest one.
    """
    ref = refine_many(spec, t, eps, [seed], tol, max_step=basin)
    lam = complex(ref.lam[0])
    if not ref.converged[0]:
        raise NoConvergence(f"no convergence from seed {seed} (residual {ref.residual[0]:.2e})")
    if basin is not None and abs(lam - seed) > basin:
        raise BasinEscape(f"root {lam} left the basin of radius {basin} around {seed}")
    if verify:
        ks = np.arange(-2, 3) + _nearest_index(spec, lam, t)
        mus = mu_values(spec, ks, t)
        order = np.argsort(np.abs(mus - lam))
        radius = verification_radius(lam, mus[order[1:]], tol)
        if count_eigenvalues(spec, t, eps, Circle(lam, radius)) != 1:
            raise NonSimpleEigenvalue(f"count around {lam} is not 1")
    return lam


def _nearest_index(spec, lam, t):
    # k whose unperturbed eigenvalue is nearest lam (search a window around |lam|^(1/n))
    guess = abs(lam) ** (1.0 / spec.n) / (2 * np.pi)
    ks = np.arange(-int(guess) - 3, int(guess) + 4)
    return int(ks[np.argmin(np.abs(mu_values(spec, ks, t) - lam))])


@dataclass
class Spectrum:
    """Verified Bloch eigenvalues of ``L_{t,eps}`` for band indices ``ks``."""

    t: float
    eps: float
    ks: np.ndarray
    lam: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    radius: np.ndarray
    count: np.ndarray  # -1 where the count could not be established

    @property
    def simple(self) -> np.ndarray:
        return self.converged & (self.count == 1)

    def __getitem__(self, k: int) -> complex:
        return complex(self.lam[list(self.ks).index(k)])

    def min_gap(self) -> float:
        lam = self.lam
        if lam.size < 2:
            return math.inf
        d = np.abs(lam[:, None] - lam[None, :])
        d[np.diag_indices(lam.size)] = np.inf
        return float(d.min())


def spectrum(spec: OperatorSpec, t: float, ks, eps: float = 1.0, tol: float = REFINE_TOL,
             verify: bool = True, seeds=None, int_tol: float = DEFAULT_TOL) -> Spectrum:
    """Eigenvalues ``lambda_k(t)`` for every ``k`` in ``ks``.

    Seeds default to Hill eigenvalues assigned to ``k`` by minimal distance
    to ``mu_k``. Neighbours one index beyond the range (and, for even order,
    the mirrored indices) are computed too so every verification circle
    knows its nearest competitor.
    """
    ks = np.asarray(sorted(set(int(k) for k in ks)))
    if spec.n % 2 == 0:
        # even order: mu_k is close to mu_{-k} and mu_{-k-1}, not only to mu_{k +- 1}
        m = int(np.max(np.abs(ks)))
        ext = np.arange(-m - 1, m + 2)
    else:
        ext = np.arange(ks.min() - 1, ks.max() + 2)
    if seeds is None:
        ext_seeds = hill_spectrum(spec, t, ext, eps)
    else:
        seeds = np.asarray(seeds, dtype=complex)
        ext_seeds = hill_spectrum(spec, t, ext, eps)
        ext_seeds[np.searchsorted(ext, ks)] = seeds
    mus = mu_values(spec, ext, t)
    spacing = np.abs(np.diff(mus))
    cap = 0.5 * np.minimum(np.append(spacing, np.inf), np.insert(spacing, 0, np.inf))
    ref = refine_many(spec, t, eps, ext_seeds, tol, max_step=cap, int_tol=int_tol)
    lam_ext = ref.lam
    sel = np.searchsorted(ext, ks)
    lam = lam_ext[sel]
    res = ref.residual[sel]
    converged = ref.converged[sel]
    radius = np.empty(ks.size)
    for i, j in enumerate(sel):
        others = np.delete(lam_ext, j)
        radius[i] = verification_radius(lam[i], others, tol)
    count = np.full(ks.size, -1)
    if verify:
        circles = [Circle(complex(l), float(r)) for l, r in zip(lam, radius)]
        try:
            count[:] = count_many(spec, t, eps, circles)
        except BlochError:
            for i, c in enumerate(circles):
                try:
                    count[i] = count_many(spec, t, eps, [c])[0]
                except BlochError:
                    count[i] = -1
    return Spectrum(t=float(t), eps=float(eps), ks=ks, lam=lam, residual=res,
                    converged=converged, radius=radius, count=count)


# -- eigenfunctions -------------------------------------------------------------------

@dataclass
class Eigenpair:
    """Normalised eigenfunction/adjoint pair on the grid ``x_i = i / M``.

    ``psi`` and ``psi_adj`` hold ``(y, y', ..., y^(n-1))`` at ``M + 1`` nodes.
    """

    k: int | None
    t: float
    eps: float
    lam: complex
    x: np.ndarray
    psi: np.ndarray
    psi_adj: np.ndarray
    alpha: complex
    residual: float = 0.0
    quasi_periodicity_defect: float = 0.0
    method: str = "shooting"
    singular_values: tuple = ()
    warning: bool = field(default=False)

    @property
    def projection_norm(self) -> float:
        return 1.0 / abs(self.alpha)

    @property
    def samples(self) -> int:
        return self.x.size - 1

    def values(self, adjoint: bool = False) -> np.ndarray:
        return (self.psi_adj if adjoint else self.psi)[0]

    def fourier(self, K: int, adjoint: bool = False) -> np.ndarray:
        """``(Psi, exp(i (2 pi k + pi t) x))`` for ``k = -K..K``."""
        coef = _fourier_coefficients(self.values(adjoint)[:-1], self.x[:-1], self.t)
        M = self.samples
        if 2 * K + 1 > M:
            raise ValueError(f"K={K} exceeds the sampling resolution M={M}")
        return coef[np.arange(-K, K + 1) % M]

    def evaluate(self, x, adjoint: bool = False) -> np.ndarray:
        """Trigonometric interpolant; quasi-periodic on the whole line."""
        M = self.samples
        coef = _fourier_coefficients(self.values(adjoint)[:-1], self.x[:-1], self.t)
        ks = np.fft.fftfreq(M, 1.0 / M)
        a = 2 * np.pi * ks + np.pi * self.t
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, a)) @ coef

    def to_record(self) -> dict:
        return {"k": self.k, "t": self.t, "eps": self.eps,
                "re_lambda": self.lam.real, "im_lambda": self.lam.imag,
                "alpha_re": self.alpha.real, "alpha_im": self.alpha.imag,
                "proj_norm": self.projection_norm, "residual": self.residual}


def _fourier_coefficients(values, x, t):
    M = values.size
    return np.fft.fft(values * np.exp(-1j * np.pi * t * x)) / M


def _inner(f, g):
    # trapezoid on a periodic integrand sampled at i / M, i < M
    return complex(np.mean(f * np.conj(g)))


def _normalise(states, x, t):
    vals = states[0, :-1]
    norm = math.sqrt(np.mean(np.abs(vals) ** 2))
    states = states / norm
    coef = _fourier_coefficients(states[0, :-1], x[:-1], t)
    j = int(np.argmax(np.abs(coef)))
    phase = np.conj(coef[j]) / abs(coef[j])
    return states * phase


def _sample_plan(system, lam_abs, samples):
    S = segment_count(system, lam_abs)
    q = max(1, int(math.ceil(samples / S)))
    return S, q


def eigenpair(spec: OperatorSpec, t: float, eps: float, lam: complex, k: int | None = None,
              method: str = "shooting", samples: int = MIN_SAMPLES,
              tol: float = DEFAULT_TOL) -> Eigenpair:
    """Eigenfunction, adjoint eigenfunction and ``alpha = (Psi, Psi*)`` at ``lam``."""
    if method == "fourier":
        ks = [k] if k is not None else [_nearest_index(spec, lam, t)]
        return fourier_eigenpairs(spec, t, ks, eps, samples=samples)[0]
    if method != "shooting":
        raise ValueError(f"unknown method {method!r}")
    return shooting_eigenpairs(spec, t, eps, [lam], [k], samples=samples, tol=tol)[0]


def shooting_eigenpairs(spec: OperatorSpec, t: float, eps: float, lams, ks=None,
                        samples: int = MIN_SAMPLES, tol: float = DEFAULT_TOL) -> list:
    lams = np.asarray(lams, dtype=complex)
    if ks is None:
        ks = [None] * lams.size
    rho = multiplier(t)
    direct = CompanionSystem.direct(spec, eps)
    adjoint = CompanionSystem.formal_adjoint(spec, eps)
    lam_abs = float(np.max(np.abs(lams)))
    S, q = _sample_plan(direct, lam_abs, samples)
    M = S * q
    x = np.arange(M + 1) / M
    P = propagate_segments(direct, lams, M, tol)
    Q = propagate_segments(adjoint, np.conj(lams), M, tol)
    out = []
    for i, lam in enumerate(lams):
        pairs = []
        for props in (P, Q):
            single = type(props)(lams=props.lams[i:i + 1], F=props.F[i:i + 1],
                                 omega=props.omega, stats=props.stats)
            states, sv = null_states(single, rho, q)
            null_dim = int(np.sum(sv <= NULL_TOL * sv[-1]))
            if null_dim != 1:
                raise NonSimpleEigenvalue(
                    f"null space dimension {null_dim} at lam={lam} (sigma={sv[:3]})")
            pairs.append((states, sv))
        psi = _normalise(pairs[0][0], x, t)
        psi_adj = _normalise(pairs[1][0], x, t)
        alpha = _inner(psi[0, :-1], psi_adj[0, :-1])
        defect = float(np.max(np.abs(psi[:, -1] - rho * psi[:, 0])
                              / np.maximum(1.0, np.abs(psi[:, 0]))))
        pair = Eigenpair(k=ks[i], t=float(t), eps=float(eps), lam=complex(lam), x=x, psi=psi,
                         psi_adj=psi_adj, alpha=alpha, quasi_periodicity_defect=defect,
                         method="shooting",
                         singular_values=(float(pairs[0][1][0]), float(pairs[0][1][1])))
        _flag_alpha(pair)
        out.append(pair)
    return out


def fourier_eigenpairs(spec: OperatorSpec, t: float, ks, eps: float = 1.0,
                       samples: int = MIN_SAMPLES, K_hill: int | None = None) -> list:
    """Eigenpairs from one Hill eigendecomposition (all ``ks`` at once)."""
    ks = list(ks)
    lam, vr, vl, KH = hill_spectrum(spec, t, ks, eps, K_hill=K_hill, vectors=True)
    M = max(samples, 4 * KH + 4)
    x = np.arange(M + 1) / M
    a = 2 * np.pi * np.arange(-KH, KH + 1) + np.pi * t
    n = spec.n
    basis = np.exp(1j * np.multiply.outer(x, a))  # (M+1, 2KH+1)
    deriv = np.stack([(1j * a) ** nu for nu in range(n)])  # (n, 2KH+1)
    rho = multiplier(t)
    out = []
    for i, k in enumerate(ks):
        v = vr[:, i] / np.linalg.norm(vr[:, i])
        w = vl[:, i] / np.linalg.norm(vl[:, i])
        psi = _normalise((basis[None] * (deriv * v)[:, None, :]).sum(-1), x, t)
        psi_adj = _normalise((basis[None] * (deriv * w)[:, None, :]).sum(-1), x, t)
        alpha = _inner(psi[0, :-1], psi_adj[0, :-1])
        defect = float(np.max(np.abs(psi[:, -1] - rho * psi[:, 0])
                              / np.maximum(1.0, np.abs(psi[:, 0]))))
        pair = Eigenpair(k=k, t=float(t), eps=float(eps), lam=complex(lam[i]), x=x, psi=psi,
                         psi_adj=psi_adj, alpha=alpha, quasi_periodicity_defect=defect,
                         method="fourier")
        _flag_alpha(pair)
        out.append(pair)
    return out


def _flag_alpha(pair):
    if abs(pair.alpha) < ALPHA_FLOOR:
        pair.warning = True
        warnings.warn(f"|alpha| = {abs(pair.alpha):.2e} below floor at t={pair.t}, "
                      f"lam={pair.lam}: near a spectral singularity", RuntimeWarning,
                      stacklevel=3)


def projection_norm_bound(pairs) -> float:
    """``sum_j 1 / |alpha_j|`` for eigenpairs sharing ``t`` and ``eps``."""
    pairs = list(pairs)
    if len({(p.t, p.eps) for p in pairs}) > 1:
        raise ConfigurationError("eigenpairs must share t and eps")
    return float(sum(1.0 / abs(p.alpha) for p in pairs))


def biorthogonality(pairs) -> np.ndarray:
    """Matrix ``G[j, m] = (Psi_j, Psi*_m)``."""
    G = np.empty((len(pairs), len(pairs)), dtype=complex)
    for j, a in enumerate(pairs):
        for m, b in enumerate(pairs):
            G[j, m] = _inner(a.psi[0, :-1], b.psi_adj[0, :-1])
    return G


# -- Fourier-coefficient bound audit ------------------------------------------------

@dataclass
class BoundAudit:
    pair: Eigenpair
    ks: np.ndarray
    coefficients: np.ndarray
    bounds: np.ndarray
    passed: np.ndarray
    parseval_defect: float
    C: float

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    def worst_ratio(self) -> float:
        finite = np.isfinite(self.bounds) & (self.bounds > 0)
        if not finite.any():
            return 0.0
        return float(np.max(np.abs(self.coefficients[finite]) / self.bounds[finite]))


def audit_bounds(pair: Eigenpair, spec: OperatorSpec, K: int = 64, slack: float = 1e-9,
                 C: float | None = None) -> BoundAudit:
    """Check ``|(Psi, e_k)| <= C P(k,t) / |lam - mu_k(t,c)|`` for ``|k| <= K``.

    ``P(k,t) = |2 pi k + pi t|^(n-2)`` for ``k != 0`` and ``pi^(n-2)`` for ``k = 0``.
    Resonant indices (``lam == mu_k``) have an infinite bound.
    """
    if K < 8:
        raise ConfigurationError("audit truncation K must be at least 8")
    if C is None:
        C = compute_C(spec)
    ks = np.arange(-K, K + 1)
    coef = pair.fourier(K)
    gap = np.abs(pair.lam - mu_values(spec, ks, pair.t))
    with np.errstate(divide="ignore"):
        bounds = np.where(gap > 0, C * _P(spec.n, ks, pair.t) / gap, np.inf)
    passed = np.abs(coef) <= bounds + slack
    defect = 1.0 - float(np.sum(np.abs(coef) ** 2))
    return BoundAudit(pair=pair, ks=ks, coefficients=coef, bounds=bounds, passed=passed,
                      parseval_defect=defect, C=C)


# -- serialisation ------------------------------------------------------------------

RECORD_FIELDS = ("k", "t", "eps", "re_lambda", "im_lambda", "alpha_re", "alpha_im",
                 "proj_norm", "residual")


def write_eigenpairs(pairs, path, fmt: str = "json"):
    records = [p.to_record() for p in pairs]
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(records, fh, indent=2)
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
            writer.writeheader()
            writer.writerows(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
