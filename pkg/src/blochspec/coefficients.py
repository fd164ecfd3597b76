"""Exact calculus on 1-periodic coefficients and the spectrality certificates.

Coefficients are finite Fourier series ``p(x) = sum_m a_m exp(2 pi i m x)``.
Derivatives and L2[0,1] norms are therefore exact (Parseval), which keeps
quadrature error out of the certification arithmetic.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError

#: Default cap on |m| for harmonic indices.
MAX_HARMONIC = 64


@dataclass(frozen=True)
class PeriodicFunction:
    """Finite Fourier series with period exactly 1.

    Parameters
    ----------
    harmonics : mapping int -> complex
        Amplitude ``a_m`` of ``exp(2 pi i m x)``. Zero entries are dropped.
    max_harmonic : int
        Largest admissible ``|m|``.
    """

    harmonics: Mapping[int, complex] = field(default_factory=dict)
    max_harmonic: int = MAX_HARMONIC

    def __post_init__(self):
        clean = {}
        for m, a in dict(self.harmonics).items():
            m = int(m)
            if abs(m) > self.max_harmonic:
                raise ConfigurationError(
                    f"harmonic index {m} exceeds cap {self.max_harmonic}")
            a = complex(a)
            if not (math.isfinite(a.real) and math.isfinite(a.imag)):
                raise ConfigurationError(f"non-finite amplitude at m={m}")
            if a != 0:
                clean[m] = clean.get(m, 0) + a
        object.__setattr__(self, "harmonics",
                           dict(sorted((m, a) for m, a in clean.items() if a != 0)))

    @classmethod
    def constant(cls, value) -> "PeriodicFunction":
        return cls({0: value})

    @classmethod
    def zero(cls) -> "PeriodicFunction":
        return cls({})

    @property
    def is_zero(self) -> bool:
        return not self.harmonics

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter(self.harmonics.keys(), dtype=int, count=len(self.harmonics))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.fromiter(self.harmonics.values(), dtype=complex,
                           count=len(self.harmonics))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(x.shape, dtype=complex)
        phase = np.exp(2j * np.pi * np.multiply.outer(x, self.indices))
        return phase @ self.amplitudes

    def coefficient(self, m: int) -> complex:
        return self.harmonics.get(int(m), 0j)

    def derivative(self, s: int = 1) -> "PeriodicFunction":
        return derivative(self, s)

    def conj(self) -> "PeriodicFunction":
        """Pointwise complex conjugate: ``a_m -> conj(a_{-m})``."""
        return PeriodicFunction({-m: np.conj(a) for m, a in self.harmonics.items()},
                                self.max_harmonic)

    def scale(self, r) -> "PeriodicFunction":
        return PeriodicFunction({m: r * a for m, a in self.harmonics.items()},
                                self.max_harmonic)

    def __add__(self, other: "PeriodicFunction") -> "PeriodicFunction":
        out = dict(self.harmonics)
        for m, a in other.harmonics.items():
            out[m] = out.get(m, 0) + a
        return PeriodicFunction(out, max(self.max_harmonic, other.max_harmonic))

    def sup_bound(self) -> float:
        """Upper bound for ``max |p(x)|`` (sum of amplitude moduli)."""
        return float(np.sum(np.abs(self.amplitudes)))

    def to_triples(self) -> list:
        return [[m, a.real, a.imag] for m, a in self.harmonics.items()]


def derivative(p: PeriodicFunction, s: int) -> PeriodicFunction:
    """Exact ``s``-th derivative: ``a_m -> (2 pi i m)^s a_m``."""
    if s < 0:
        raise ValueError("derivative order must be nonnegative")
    if s == 0:
        return p
    return PeriodicFunction({m: (2j * np.pi * m) ** s * a
                             for m, a in p.harmonics.items()}, p.max_harmonic)


def l2_norm(p: PeriodicFunction) -> float:
    """L2[0,1] norm via Parseval."""
    if p.is_zero:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(p.amplitudes) ** 2)))


class Regime(str, enum.Enum):
    ODD = "odd"
    EVEN_GENERAL = "even_general"
    EVEN_N2 = "even_n2"

    @classmethod
    def for_order(cls, n: int) -> "Regime":
        if n % 2:
            return cls.ODD
        return cls.EVEN_N2 if n == 2 else cls.EVEN_GENERAL


@dataclass(frozen=True)
class OperatorSpec:
    """The expression ``(-i)^n y^(n) + c y^(n-1) + sum_{v=2}^n p_v y^(n-v)``.

    ``coeffs[v - 2]`` holds ``p_v``. A zero drift ``c`` is accepted for even
    ``n`` so that uncertified fixtures (free operator, Gasymov potential) can
    be built; :func:`certify` rejects such specs.
    """

    n: int
    c: float = 0.0
    coeffs: tuple = ()
    regime: Regime | None = None

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise ConfigurationError(f"order n must be an integer >= 2, got {n!r}")
        if isinstance(self.c, complex):
            if self.c.imag != 0:
                raise ConfigurationError("drift constant c must be real")
            object.__setattr__(self, "c", self.c.real)
        object.__setattr__(self, "c", float(self.c))
        coeffs = tuple(self.coeffs)
        if len(coeffs) > n - 1:
            raise ConfigurationError(f"expected at most {n - 1} coefficients p_2..p_n")
        coeffs = coeffs + (PeriodicFunction.zero(),) * (n - 1 - len(coeffs))
        object.__setattr__(self, "coeffs", coeffs)
        expected = Regime.for_order(n)
        regime = expected if self.regime is None else Regime(self.regime)
        if regime is not expected:
            raise ConfigurationError(f"regime {regime.value} inconsistent with n={n}")
        object.__setattr__(self, "regime", regime)
        if regime is Regime.ODD and self.c != 0:
            raise ConfigurationError("odd order requires p_1 = 0 (c = 0)")

    @classmethod
    def build(cls, n: int, c: float = 0.0, **coeffs) -> "OperatorSpec":
        """Convenience constructor: ``OperatorSpec.build(3, p3={1: 0.5})``."""
        table = [PeriodicFunction.zero()] * (n - 1)
        for key, value in coeffs.items():
            v = int(key.lstrip("p"))
            if not 2 <= v <= n:
                raise ConfigurationError(f"no coefficient p_{v} for order {n}")
            table[v - 2] = value if isinstance(value, PeriodicFunction) else PeriodicFunction(value)
        return cls(n=n, c=c, coeffs=tuple(table))

    def p(self, v: int) -> PeriodicFunction:
        return self.coeffs[v - 2]

    @property
    def is_free(self) -> bool:
        return all(p.is_zero for p in self.coeffs)

    @property
    def is_even(self) -> bool:
        return self.n % 2 == 0

    def scaled(self, r: float) -> "OperatorSpec":
        return OperatorSpec(self.n, self.c, tuple(p.scale(r) for p in self.coeffs))

    def unperturbed(self) -> "OperatorSpec":
        return OperatorSpec(self.n, self.c)

    def to_dict(self) -> dict:
        return {"n": self.n, "c": self.c,
                "coeffs": {str(v): self.p(v).to_triples()
                           for v in range(2, self.n + 1) if not self.p(v).is_zero}}


def spec_from_dict(doc: Mapping) -> OperatorSpec:
    """Parse ``{"n": int, "c": real, "coeffs": {"2": [[m, re, im], ...]}}``."""
    try:
        n = doc["n"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigurationError("'n' must be an integer")
        c = doc.get("c", 0.0)
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise ConfigurationError("'c' must be a real number")
        table = {}
        for key, triples in dict(doc.get("coeffs", {})).items():
            v = int(key)
            harmonics = {}
            for m, re, im in triples:
                if int(m) != m:
                    raise ConfigurationError(f"non-integer harmonic index {m!r}")
                harmonics[int(m)] = harmonics.get(int(m), 0) + complex(re, im)
            table[f"p{v}"] = PeriodicFunction(harmonics)
    except ConfigurationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed operator spec: {exc}") from exc
    return OperatorSpec.build(n, c, **table)


def load_spec(path) -> OperatorSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read operator spec {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("operator spec must be a JSON object")
    return spec_from_dict(doc)


def compute_C(spec: OperatorSpec) -> float:
    """Double sum over ``v = 2..n``, ``s = 0..n-v`` of
    ``(n-v)! ||p_v^(s)|| / (s! (n-v-s)! pi^(v+s-2))``."""
    n = spec.n
    total = 0.0
    for v in range(2, n + 1):
        p = spec.p(v)
        if p.is_zero:
            continue
        for s in range(n - v + 1):
            binom = math.comb(n - v, s)
            total += binom * l2_norm(derivative(p, s)) / np.pi ** (v + s - 2)
    return float(total)


@dataclass(frozen=True)
class Certificate:
    C: float
    threshold: float
    satisfied: bool
    margin: float
    regime: Regime

    def to_dict(self) -> dict:
        return {"C": self.C, "threshold": self.threshold, "satisfied": self.satisfied,
                "margin": self.margin, "regime": self.regime.value}


def odd_threshold(n: int) -> float:
    return np.pi ** 2 * 2.0 ** (-n + 0.5)


def even_factor(n: int) -> float:
    """Factor ``1/6 + 2^(2n-4)/pi^2`` multiplying ``C^2`` in the even test."""
    return 1.0 / 6.0 + 2.0 ** (2 * n - 4) / np.pi ** 2


def certify(spec: OperatorSpec) -> Certificate:
    """Evaluate the explicit spectrality condition for the spec's regime.

    odd:           C <= pi^2 2^(-n+1/2)                 (threshold = bound on C)
    even_general:  c^2 >= (1/6 + 2^(2n-4)/pi^2) C^2     (threshold = bound on c^2)
    even_n2:       |c| > ||p_2|| / 2                    (threshold = bound on |c|)

    Equality satisfies the first two and fails the strict n = 2 test.
    """
    C = compute_C(spec)
    regime = spec.regime
    if regime is Regime.ODD:
        if spec.c != 0:
            raise ConfigurationError("odd order requires c = 0")
        threshold = odd_threshold(spec.n)
        margin = threshold - C
        satisfied = margin >= 0
    else:
        if spec.c == 0 or not math.isfinite(spec.c):
            raise ConfigurationError("even order requires a real nonzero drift constant c")
        if regime is Regime.EVEN_GENERAL:
            threshold = even_factor(spec.n) * C ** 2
            margin = spec.c ** 2 - threshold
            satisfied = margin >= 0
        else:
            threshold = 0.5 * l2_norm(spec.p(2))
            margin = abs(spec.c) - threshold
            satisfied = margin > 0
    return Certificate(C=C, threshold=float(threshold), satisfied=bool(satisfied),
                       margin=float(margin), regime=regime)
