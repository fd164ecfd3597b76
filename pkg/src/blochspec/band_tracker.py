"""Band continuation in ``t``, global band gluing and the ``eps``-homotopy checks.

A band ``lambda_k(t)`` is followed along a quasimomentum grid by
predictor-corrector continuation. Branches are glued into the global band
through the identity ``L_{t+2} = L_t``. For even order with real drift the
homotopy ``L_{t,eps}`` from the drift-only operator is checked against
horizontal and vertical lines in the resolvent set and the rectangles they
bound.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bloch_solver import (REFINE_TOL, count_many, mu, refine_many, spectrum,
                           verification_radius)
from .coefficients import OperatorSpec, Regime, certify
from .contours import Circle, Polyline
from .errors import (BranchJump, CertificationCounterexample, ConfigurationError,
                     NonSimpleEigenvalue)
from .hill import hill_spectrum
from .operator_core import (DEFAULT_TOL, CompanionSystem, characteristic_values,
                            free_characteristic)

JUNCTION_TOL = 1e-6
DEFAULT_K = 6
DEGENERACY_TOL = 1e-6


def default_t_grid(nodes: int) -> np.ndarray:
    """``nodes`` equispaced points in ``(-1, 1]`` ending at ``t = 1``."""
    return -1.0 + 2.0 * np.arange(1, nodes + 1) / nodes


# -- bands ----------------------------------------------------------------------------

@dataclass
class BandFunction:
    """Samples of one analytic branch ``lambda_k(t)`` on an increasing grid.

    ``left_limit`` is the branch continued one-sidedly to ``t = -1``.
    """

    k: int
    t: np.ndarray
    lam: np.ndarray
    count: np.ndarray
    eps: float = 1.0
    left_limit: complex | None = None

    @property
    def jumps(self) -> np.ndarray:
        return np.abs(np.diff(self.lam))

    @property
    def max_jump(self) -> float:
        return float(self.jumps.max()) if self.lam.size > 1 else 0.0

    def at(self, t: float) -> complex:
        """Piecewise-linear interpolation of the samples (exact at nodes)."""
        ts, lam = self.t, self.lam
        if self.left_limit is not None:
            ts = np.insert(ts, 0, -1.0)
            lam = np.insert(lam, 0, self.left_limit)
        return complex(np.interp(t, ts, lam.real) + 1j * np.interp(t, ts, lam.imag))

    def rows(self):
        for t, lam in zip(self.t, self.lam):
            yield {"t": float(t), "re_lambda": lam.real, "im_lambda": lam.imag, "k": self.k}


def _hill_check(spec, t, ks, eps, lam):
    """Raise when a continued root is not the Hill eigenvalue of its band."""
    ext = np.arange(min(ks) - 1, max(ks) + 2)
    hill = hill_spectrum(spec, t, ext, eps)
    for k, value in zip(ks, lam):
        j = int(np.searchsorted(ext, k))
        others = np.delete(hill, j)
        if np.min(np.abs(others - value)) <= abs(hill[j] - value):
            raise BranchJump(f"band {k} at t={t:.6g} continued onto another branch")


def track_bands(spec: OperatorSpec, ks, t_grid, eps: float = 1.0, verify: bool = True,
                tol: float = REFINE_TOL, int_tol: float = DEFAULT_TOL) -> dict:
    """Continue bands ``ks`` along ``t_grid`` simultaneously; returns ``{k: BandFunction}``.

    The first node is seeded from the Hill truncation, later nodes by linear
    extrapolation of the previous two samples. Every corrected sample is
    checked against the Hill assignment at its node (a failed check retries
    the node from Hill seeds before raising) and, with ``verify``,
    by a count of 1 on a circle separating it from its neighbours.
    """
    ks = sorted(int(k) for k in ks)
    ts = np.asarray(sorted(float(t) for t in t_grid))
    lam = np.empty((len(ks), ts.size), dtype=complex)
    count = np.full((len(ks), ts.size), -1)
    for j, t in enumerate(ts):
        seeds = None
        if j == 1:
            seeds = lam[:, 0]
        elif j > 1:
            seeds = lam[:, j - 1] + (lam[:, j - 1] - lam[:, j - 2]) * (
                (t - ts[j - 1]) / (ts[j - 1] - ts[j - 2]))
        s = spectrum(spec, t, ks, eps, tol=tol, verify=verify, seeds=seeds, int_tol=int_tol)
        try:
            _hill_check(spec, t, ks, eps, s.lam)
        except BranchJump:
            if seeds is None:
                raise
            # the predictor overshot on a coarse grid; restart from the Hill seeds
            s = spectrum(spec, t, ks, eps, tol=tol, verify=verify, int_tol=int_tol)
            _hill_check(spec, t, ks, eps, s.lam)
        lam[:, j] = s.lam
        count[:, j] = s.count
        if verify and np.any(s.count != 1):
            bad = [k for k, c in zip(ks, s.count) if c != 1]
            raise BranchJump(f"verification count differs from 1 for k={bad} at t={t:.6g}")
    if ts.size >= 2:
        left = _left_limits(spec, ks, ts, lam, eps, tol, int_tol)
    else:
        left = [None] * len(ks)
    return {k: BandFunction(k=k, t=ts.copy(), lam=lam[i], count=count[i], eps=float(eps),
                            left_limit=left[i])
            for i, k in enumerate(ks)}


def _left_limits(spec, ks, ts, lam, eps, tol, int_tol):
    if ts[0] <= -1.0:
        return list(lam[:, 0])
    slope = (lam[:, 1] - lam[:, 0]) / (ts[1] - ts[0])
    seeds = lam[:, 0] + slope * (-1.0 - ts[0])
    s = spectrum(spec, -1.0, ks, eps, tol=tol, verify=False, seeds=seeds, int_tol=int_tol)
    try:
        _hill_check(spec, -1.0, ks, eps, s.lam)
    except BranchJump:
        s = spectrum(spec, -1.0, ks, eps, tol=tol, verify=False, int_tol=int_tol)
        _hill_check(spec, -1.0, ks, eps, s.lam)
    return list(s.lam)


def track_band(spec: OperatorSpec, k: int, t_grid, eps: float = 1.0,
               verify: bool = True) -> BandFunction:
    return track_bands(spec, [k], t_grid, eps, verify)[k]


@dataclass
class GlobalBand:
    """``lambda(t) = lambda_k(t - 2k)`` for ``t`` in ``(2k - 1, 2k + 1]``."""

    bands: dict
    # (k, lambda_k(1), lambda_{k+1}(-1+), residual)
    junctions: list = field(default_factory=list)

    def __call__(self, t: float) -> complex:
        k = int(math.ceil((t - 1.0) / 2.0))
        if k not in self.bands:
            raise KeyError(f"band {k} needed for t={t} was not tracked")
        return self.bands[k].at(t - 2 * k)

    @property
    def max_residual(self) -> float:
        return max((j[3] for j in self.junctions), default=0.0)


def glue_bands(bands, tol: float = JUNCTION_TOL, check: bool = True) -> GlobalBand:
    """Glue consecutive branches; junction residual ``|lambda_k(1) - lambda_{k+1}(-1+)|``.

    Raises :class:`BranchJump` when a relative residual exceeds ``tol``.
    """
    if isinstance(bands, dict):
        bands = list(bands.values())
    table = {b.k: b for b in bands}
    junctions = []
    for k in sorted(table):
        if k + 1 not in table:
            continue
        lo, hi = table[k], table[k + 1]
        if not np.isclose(lo.t[-1], 1.0) or hi.left_limit is None:
            raise ConfigurationError("gluing needs t = 1 in the grid and left limits at t = -1")
        a, b = complex(lo.lam[-1]), complex(hi.left_limit)
        res = abs(a - b)
        junctions.append((k, a, b, res))
        if check and res > tol * max(1.0, abs(a)):
            raise BranchJump(f"junction {k}->{k + 1} residual {res:.3e} exceeds tolerance")
    return GlobalBand(bands=table, junctions=junctions)


# -- resolvent lines and rectangles ---------------------------------------------------

def _require_even(spec: OperatorSpec):
    if spec.regime is Regime.ODD:
        raise ConfigurationError("resolvent lines are defined for even order only")
    if spec.c == 0:
        raise ConfigurationError("resolvent lines need a nonzero drift constant")


def line_ordinate(spec: OperatorSpec, s: int, t: float) -> float:
    """Ordinate ``c i^(n-2) ((2s + 1) pi + pi t)^(n-1)`` of the horizontal line."""
    n = spec.n
    sign = (-1) ** ((n - 2) // 2)
    return float(spec.c * sign * ((2 * s + 1) * np.pi + np.pi * t) ** (n - 1))


def right_abscissa(n: int, s: int, t: float) -> float:
    """``(2 pi s + pi)^n`` for ``|t| <= 1/2``, ``(2 pi s)^n`` otherwise."""
    return float((2 * np.pi * s + np.pi) ** n if abs(t) <= 0.5 else (2 * np.pi * s) ** n)


@dataclass(frozen=True)
class ResolventLine:
    """Horizontal line ``Im lam = value`` (``kind="H"``) or vertical ``Re lam = value``."""

    kind: str
    value: float
    t: float
    s: int | None = None

    @classmethod
    def horizontal(cls, spec: OperatorSpec, s: int, t: float) -> "ResolventLine":
        _require_even(spec)
        return cls("H", line_ordinate(spec, s, t), float(t), int(s))

    @classmethod
    def vertical(cls, a: float, t: float = 0.0) -> "ResolventLine":
        return cls("V", float(a), float(t))

    @classmethod
    def right(cls, spec: OperatorSpec, s: int, t: float) -> "ResolventLine":
        _require_even(spec)
        return cls("V", right_abscissa(spec.n, s, t), float(t), int(s))

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z)
        return np.abs((z.imag if self.kind == "H" else z.real) - self.value)

    def samples(self, radius: float, count: int) -> np.ndarray:
        """``count`` equispaced points of the line inside ``|lam| <= radius``."""
        if abs(self.value) >= radius:
            return np.empty(0, dtype=complex)
        half = math.sqrt(radius ** 2 - self.value ** 2)
        u = np.linspace(-half, half, count)
        return u + 1j * self.value if self.kind == "H" else self.value + 1j * u


@dataclass
class LineCheck:
    line: ResolventLine
    eps: np.ndarray
    distance: np.ndarray  # min distance of computed eigenvalues to the line, per eps
    relative_delta: np.ndarray  # min |Delta / Delta_0| over the sampled points, per eps

    @property
    def margin(self) -> float:
        return float(self.distance.min())

    @property
    def delta_margin(self) -> float:
        return float(self.relative_delta.min()) if self.relative_delta.size else math.inf


def verify_line(spec: OperatorSpec, line: ResolventLine, eps_grid=None, samples: int = 201,
                K: int = DEFAULT_K, tol: float = REFINE_TOL) -> LineCheck:
    """Sampled check that ``line`` avoids the spectrum of ``L_{t,eps}``.

    The window is the disk of radius ``1.5 |mu_{K+1}(t, c)|``. The distance
    margin is the minimum over ``eps`` of the distance from the eigenvalues
    with ``|k| <= K + 1`` to the line. ``|Delta / Delta_0|`` on the sampled
    points is reported alongside, normalised by the drift-only determinant.
    """
    _require_even(spec)
    t = line.t
    eps_grid = np.linspace(0, 1, 11) if eps_grid is None else np.asarray(eps_grid, float)
    radius = 1.5 * abs(mu(spec, K + 1, t))
    pts = line.samples(radius, samples)
    ks = range(-K - 1, K + 2)
    dist = np.empty(eps_grid.size)
    rel = np.empty(eps_grid.size) if pts.size else np.empty(0)
    base = free_characteristic(spec, pts, t) if pts.size else None
    for i, eps in enumerate(eps_grid):
        lam = spectrum(spec, t, ks, eps, tol=tol, verify=False).lam
        inside = lam[np.abs(lam) <= radius]
        dist[i] = float(np.min(line.distance(inside))) if inside.size else math.inf
        if pts.size:
            system = CompanionSystem.direct(spec, eps)
            rel[i] = float(np.min(np.abs(characteristic_values(system, pts, t) / base)))
    check = LineCheck(line=line, eps=eps_grid, distance=dist, relative_delta=rel)
    if check.margin <= 0:
        raise CertificationCounterexample(f"an eigenvalue lies on {line}")
    return check


@dataclass(frozen=True)
class Rectangle:
    """``a < Re lam < c(s, t)`` between the horizontal lines through ``b(k, t)`` and
    ``b(k + 1, t)``."""

    k: int
    s: int
    a: float
    t: float
    x1: float
    y0: float
    y1: float

    @classmethod
    def build(cls, spec: OperatorSpec, k: int, t: float, K: int = DEFAULT_K,
              a: float | None = None, s: int | None = None) -> "Rectangle":
        """Defaults ``a = -2 |mu_K(t, c)|`` and ``s = K + 2``."""
        _require_even(spec)
        if a is None:
            a = -2.0 * abs(mu(spec, K, t))
        if s is None:
            s = K + 2
        b0, b1 = line_ordinate(spec, k - 1, t), line_ordinate(spec, k, t)
        return cls(int(k), int(s), float(a), float(t), right_abscissa(spec.n, s, t),
                   min(b0, b1), max(b0, b1))

    def contour(self) -> Polyline:
        return Polyline.rectangle(self.a, self.x1, self.y0, self.y1)

    def contains(self, z) -> bool:
        return self.a < z.real < self.x1 and self.y0 < z.imag < self.y1

    def boundary_distance(self, z) -> float:
        return float(min(z.real - self.a, self.x1 - z.real, z.imag - self.y0, self.y1 - z.imag))

    def lines(self, spec: OperatorSpec) -> list:
        return [ResolventLine.horizontal(spec, self.k - 1, self.t),
                ResolventLine.horizontal(spec, self.k, self.t),
                ResolventLine.vertical(self.a, self.t),
                ResolventLine.right(spec, self.s, self.t)]


def verify_rectangles(spec: OperatorSpec, rects, eps_grid=None, max_depth: int = 3):
    """Counts inside each rectangle (sharing one ``t``) for each ``eps``.

    Returns an integer array of shape ``(len(rects), len(eps_grid))``. When a
    count changes between neighbouring ``eps`` nodes the interval is bisected
    up to ``max_depth`` times and :class:`CertificationCounterexample` is
    raised with the bracketing interval.
    """
    rects = list(rects)
    if len({r.t for r in rects}) != 1:
        raise ConfigurationError("rectangles must share the same t")
    t = rects[0].t
    eps_grid = np.linspace(0, 1, 11) if eps_grid is None else np.asarray(eps_grid, float)
    contours = [r.contour() for r in rects]

    def counts_at(eps):
        return np.array(count_many(spec, t, eps, contours, relative=True))

    table = np.stack([counts_at(e) for e in eps_grid], axis=1)
    for i in range(eps_grid.size - 1):
        changed = table[:, i] != table[:, i + 1]
        if not changed.any():
            continue
        lo, hi = eps_grid[i], eps_grid[i + 1]
        c_lo = table[:, i]
        for _ in range(max_depth):
            mid = 0.5 * (lo + hi)
            c_mid = counts_at(mid)
            if np.any(c_mid != c_lo):
                hi = mid
            else:
                lo, c_lo = mid, c_mid
        ks = [r.k for r, c in zip(rects, changed) if c]
        raise CertificationCounterexample(
            f"rectangle count changes for k={ks} at t={t} between eps={lo:.4g} and {hi:.4g}")
    return table


def verify_rectangle(spec: OperatorSpec, rect: Rectangle, eps_grid=None) -> list:
    return [int(c) for c in verify_rectangles(spec, [rect], eps_grid)[0]]


def homotopy_track(spec: OperatorSpec, k: int, t: float, eps_grid=None, K: int = DEFAULT_K,
                   allow_uncertified: bool = False, tol: float = REFINE_TOL) -> list:
    """Follow ``lambda_k`` of ``L_{t,eps}`` from ``mu_k(t, c)`` at ``eps = 0``.

    Each node is refined from the previous one and verified by a count of 1
    on a circle; leaving the rectangle ``R(a, s, k, t)`` raises
    :class:`CertificationCounterexample`. Returns ``[(eps, lam), ...]``.
    """
    _require_even(spec)
    if not allow_uncertified and not certify(spec).satisfied:
        raise ConfigurationError("homotopy tracking requires a certified spec")
    eps_grid = np.linspace(0, 1, 11) if eps_grid is None else np.asarray(eps_grid, float)
    rect = Rectangle.build(spec, k, t, K)
    path = []
    prev = []
    for eps in eps_grid:
        if eps == 0:
            lam = mu(spec, k, t)
        else:
            seed = prev[-1] if len(prev) < 2 else prev[-1] + (prev[-1] - prev[-2])
            neighbours = hill_spectrum(spec, t, [k - 1, k + 1], eps)
            cap = 0.5 * float(np.min(np.abs(neighbours - prev[-1])))
            ref = refine_many(spec, t, eps, [seed], tol, max_step=cap)
            lam = complex(ref.lam[0])
            radius = verification_radius(lam, neighbours, tol)
            if count_many(spec, t, eps, [Circle(lam, radius)])[0] != 1:
                raise NonSimpleEigenvalue(f"count around {lam} at eps={eps} is not 1")
        if not rect.contains(lam):
            raise CertificationCounterexample(
                f"band {k} at t={t}, eps={eps} left its rectangle: {lam}")
        prev.append(lam)
        path.append((float(eps), complex(lam)))
    return path


# -- simplicity -----------------------------------------------------------------------

@dataclass
class SimplicityReport:
    """Minimum pairwise eigenvalue distance over a ``t`` grid."""

    t: np.ndarray
    gaps: np.ndarray  # per-t minimum gap
    spectra: list

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min())

    @property
    def worst_t(self) -> float:
        return float(self.t[int(np.argmin(self.gaps))])

    def degenerate(self, tol: float = DEGENERACY_TOL) -> bool:
        """True if some gap is below ``tol`` relative to the eigenvalue size."""
        for s, g in zip(self.spectra, self.gaps):
            if g <= tol * max(1.0, float(np.max(np.abs(s.lam)))):
                return True
        return False


def simplicity_report(spec: OperatorSpec, t_grid, k_range=DEFAULT_K, eps: float = 1.0,
                      verify: bool = False) -> SimplicityReport:
    ks = range(-k_range, k_range + 1)
    ts = np.asarray(list(t_grid), dtype=float)
    spectra = [spectrum(spec, t, ks, eps, verify=verify) for t in ts]
    gaps = np.array([s.min_gap() for s in spectra])
    return SimplicityReport(t=ts, gaps=gaps, spectra=spectra)


def spectrum_table(spectra) -> list:
    """Rows ``{t, k, re_lambda, im_lambda, residual, count}`` for a list of spectra."""
    rows = []
    for s in spectra:
        for k, lam, r, c in zip(s.ks, s.lam, s.residual, s.count):
            rows.append({"t": s.t, "k": int(k), "re_lambda": lam.real, "im_lambda": lam.imag,
                         "residual": float(r), "count": int(c)})
    return rows


# -- export ---------------------------------------------------------------------------

BAND_FIELDS = ("t", "re_lambda", "im_lambda", "k")


def write_bands_csv(bands, path):
    if isinstance(bands, dict):
        bands = list(bands.values())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BAND_FIELDS)
        writer.writeheader()
        for band in bands:
            writer.writerows(band.rows())


def plot_bundle(global_band: GlobalBand) -> dict:
    """JSON-ready ``{bands: [...], junctions: [...]}``."""
    bands = []
    for k in sorted(global_band.bands):
        b = global_band.bands[k]
        bands.append({"k": k, "eps": b.eps, "t": b.t.tolist(),
                      "re_lambda": b.lam.real.tolist(), "im_lambda": b.lam.imag.tolist(),
                      "max_jump": b.max_jump})
    junctions = [{"k": k, "left": [a.real, a.imag], "right": [b.real, b.imag], "residual": r}
                 for k, a, b, r in global_band.junctions]
    return {"bands": bands, "junctions": junctions}


def write_plot_bundle(global_band: GlobalBand, path):
    with open(path, "w") as fh:
        json.dump(plot_bundle(global_band), fh, indent=2)
