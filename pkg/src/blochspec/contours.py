"""Closed contours in the complex plane and winding-number counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContourTooClose, NonConvergentWinding

START_NODES = 64
MAX_NODES = 1 << 15
MAX_PHASE_STEP = np.pi / 4
MAX_LOG_MODULUS_STEP = 1.0
NEAR_ZERO = 1e-11


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __call__(self, s):
        return self.center + self.radius * np.exp(2j * np.pi * np.asarray(s))

    def contains(self, z) -> bool:
        return abs(z - self.center) < self.radius

    @property
    def max_modulus(self) -> float:
        return abs(self.center) + self.radius


@dataclass(frozen=True)
class Polyline:
    """Closed polygon traversed through ``vertices`` (counterclockwise for a
    positive orientation).

    The parameter on ``[0, 1)`` gives each edge a share that is half
    proportional to its length and half uniform, so short edges of very
    elongated rectangles still receive nodes.
    """

    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex)
        closed = np.append(v, v[0])
        lengths = np.abs(np.diff(closed))
        share = 0.5 * lengths / lengths.sum() + 0.5 / lengths.size
        cum = np.concatenate([[0.0], np.cumsum(share)])
        cum[-1] = 1.0
        object.__setattr__(self, "_closed", closed)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def rectangle(cls, x0, x1, y0, y1) -> "Polyline":
        return cls((complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)))

    def __call__(self, s):
        s = np.mod(np.asarray(s, dtype=float), 1.0)
        edge = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self._cum) - 2)
        frac = (s - self._cum[edge]) / (self._cum[edge + 1] - self._cum[edge])
        return self._closed[edge] + frac * (self._closed[edge + 1] - self._closed[edge])

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self._closed)))

    def contains(self, z) -> bool:
        # winding of the polygon around z, exact for simple polygons
        d = self._closed - z
        return abs(np.sum(np.angle(d[1:] / d[:-1]))) > np.pi


def _phase_steps(values):
    ratio = np.roll(values, -1) / values
    return np.angle(ratio), np.log(np.abs(ratio))


class _Track:
    """Adaptive node set for one contour."""

    def __init__(self, contour, nodes):
        self.contour = contour
        self.s = np.arange(nodes) / nodes
        self.v = None
        self.history = []
        self.done = False
        self.result = None

    def pending(self):
        return self.contour(self.s[self._missing])

    def set_values(self, values):
        self.v[self._missing] = values

    def insert(self, mask):
        """Bisect intervals flagged by ``mask``; returns number of new nodes."""
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            return 0
        s_next = np.append(self.s[1:], 1.0)
        mids = 0.5 * (self.s[idx] + s_next[idx])
        s = np.concatenate([self.s, mids])
        v = np.concatenate([self.v, np.full(mids.size, np.nan + 0j)])
        order = np.argsort(s)
        self.s, self.v = s[order], v[order]
        return idx.size

    @property
    def _missing(self):
        return np.isnan(self.v)


def winding_numbers(evaluate, contours, start_nodes=START_NODES, max_nodes=MAX_NODES):
    """Winding numbers of ``evaluate`` around each closed contour.

    ``evaluate(points) -> values`` is called on batches that may mix points
    from several contours. Intervals whose phase or log-modulus step is
    large are bisected; a contour is accepted once its winding is unchanged
    after a further global doubling of its nodes.
    """
    tracks = [_Track(c, start_nodes) for c in contours]
    for tr in tracks:
        tr.v = np.full(tr.s.size, np.nan + 0j)
    while True:
        active = [tr for tr in tracks if not tr.done]
        if not active:
            break
        pts = [tr.pending() for tr in active]
        sizes = [p.size for p in pts]
        if sum(sizes):
            vals = evaluate(np.concatenate(pts))
            offset = 0
            for tr, m in zip(active, sizes):
                tr.set_values(vals[offset:offset + m])
                offset += m
        for tr in active:
            v = tr.v
            if not np.all(np.isfinite(v)):
                raise NonConvergentWinding("non-finite characteristic values on contour")
            mag = np.abs(v)
            nb = np.maximum(np.roll(mag, 1), np.roll(mag, -1))
            if np.any(mag == 0) or np.any(mag < NEAR_ZERO * nb):
                raise ContourTooClose("characteristic determinant vanishes on the contour")
            dphi, dlog = _phase_steps(v)
            coarse = (np.abs(dphi) > MAX_PHASE_STEP) | (np.abs(dlog) > MAX_LOG_MODULUS_STEP)
            if tr.s.size >= max_nodes:
                raise NonConvergentWinding(f"winding not resolved with {tr.s.size} nodes")
            if np.any(coarse):
                tr.insert(coarse)
                continue
            w = int(np.rint(np.sum(dphi) / (2 * np.pi)))
            tr.history.append(w)
            if len(tr.history) >= 2 and tr.history[-1] == tr.history[-2]:
                tr.done = True
                tr.result = w
            else:
                tr.insert(np.ones(tr.s.size, dtype=bool))
    return [tr.result for tr in tracks]
