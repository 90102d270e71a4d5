"""Band-limited trigonometric fields with exact derivatives.

Convergence studies need the same continuum data on every grid and exact
reference values; a finite Fourier sum gives both.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.lattice.torus import Torus

TWO_PI = 2.0 * np.pi

Mode = Tuple[Tuple[int, ...], float, float]


@dataclass(frozen=True)
class TrigField:
    """c + Σ A cos(2π k·x) + B sin(2π k·x) over integer wave vectors k."""

    d: int
    modes: Tuple[Mode, ...] = ()
    constant: float = 0.0

    @classmethod
    def random(cls, rng: np.random.Generator, d: int, n_modes: int = 3, max_wave: int = 1,
               amplitude: float = 1.0, constant: float = 0.0) -> "TrigField":
        modes = []
        for _ in range(n_modes):
            k = tuple(int(v) for v in rng.integers(-max_wave, max_wave + 1, size=d))
            if not any(k):
                k = (1,) + (0,) * (d - 1)
            a, b = rng.uniform(-1.0, 1.0, size=2) * amplitude
            modes.append((k, float(a), float(b)))
        return cls(d, tuple(modes), constant)

    @classmethod
    def const(cls, d: int, value: float) -> "TrigField":
        return cls(d, (), value)

    def bound(self) -> float:
        return abs(self.constant) + sum(abs(a) + abs(b) for _, a, b in self.modes)

    def scaled(self, s: float) -> "TrigField":
        return TrigField(self.d, tuple((k, a * s, b * s) for k, a, b in self.modes), self.constant * s)

    def _phases(self, torus: Torus):
        x = torus.coords()
        for k, a, b in self.modes:
            kv = np.asarray(k, dtype=float)
            phase = TWO_PI * sum(kv[i] * x[i] for i in range(self.d))
            yield kv, a, b, np.cos(phase), np.sin(phase)

    def values(self, torus: Torus) -> np.ndarray:
        out = np.full(torus.grid, self.constant, dtype=float)
        for _, a, b, c, s in self._phases(torus):
            out += a * c + b * s
        return out

    def gradient(self, torus: Torus) -> np.ndarray:
        out = np.zeros(torus.grid + (self.d,))
        for kv, a, b, c, s in self._phases(torus):
            out += (TWO_PI * (-a * s + b * c))[..., None] * kv
        return out

    def hessian(self, torus: Torus) -> np.ndarray:
        out = np.zeros(torus.grid + (self.d, self.d))
        for kv, a, b, c, s in self._phases(torus):
            out -= (TWO_PI ** 2 * (a * c + b * s))[..., None, None] * np.outer(kv, kv)
        return out

    def laplacian(self, torus: Torus) -> np.ndarray:
        return np.trace(self.hessian(torus), axis1=-2, axis2=-1)


@dataclass(frozen=True)
class VectorTrig:
    parts: Tuple[TrigField, ...]

    @classmethod
    def random(cls, rng: np.random.Generator, d: int, amplitude: float = 1.0) -> "VectorTrig":
        return cls(tuple(TrigField.random(rng, d, amplitude=amplitude) for _ in range(d)))

    @classmethod
    def const(cls, values) -> "VectorTrig":
        d = len(values)
        return cls(tuple(TrigField.const(d, float(v)) for v in values))

    def values(self, torus: Torus) -> np.ndarray:
        return np.stack([p.values(torus) for p in self.parts], axis=-1)

    def jacobian(self, torus: Torus) -> np.ndarray:
        """[..., c, a] = ∂_c X^a."""
        return np.stack([p.gradient(torus) for p in self.parts], axis=-1)


@dataclass(frozen=True)
class SymTrig:
    """Symmetric 2-tensor field; entries keyed by (a, b) with a <= b."""

    d: int
    entries: Dict[Tuple[int, int], TrigField] = field(default_factory=dict)

    def _entry(self, a: int, b: int) -> TrigField:
        key = (min(a, b), max(a, b))
        return self.entries.get(key, TrigField.const(self.d, 0.0))

    @classmethod
    def identity(cls, d: int, scale: float = 1.0) -> "SymTrig":
        return cls(d, {(a, a): TrigField.const(d, scale) for a in range(d)})

    @classmethod
    def random(cls, rng: np.random.Generator, d: int, amplitude: float = 1.0) -> "SymTrig":
        return cls(d, {(a, b): TrigField.random(rng, d, amplitude=amplitude)
                       for a in range(d) for b in range(a, d)})

    def plus(self, other: "SymTrig") -> "SymTrig":
        entries = {}
        for a in range(self.d):
            for b in range(a, self.d):
                x, y = self._entry(a, b), other._entry(a, b)
                entries[(a, b)] = TrigField(self.d, x.modes + y.modes, x.constant + y.constant)
        return SymTrig(self.d, entries)

    def scaled(self, s: float) -> "SymTrig":
        return SymTrig(self.d, {k: v.scaled(s) for k, v in self.entries.items()})

    def gershgorin(self) -> float:
        """Bound on the spectral radius of the oscillating part."""
        return max(sum(self._entry(a, b).bound() for b in range(self.d)) for a in range(self.d))

    def values(self, torus: Torus) -> np.ndarray:
        out = np.zeros(torus.grid + (self.d, self.d))
        for a in range(self.d):
            for b in range(self.d):
                out[..., a, b] = self._entry(a, b).values(torus)
        return out

    def gradient(self, torus: Torus) -> np.ndarray:
        """[..., c, a, b] = ∂_c T_ab."""
        out = np.zeros(torus.grid + (self.d, self.d, self.d))
        for a in range(self.d):
            for b in range(self.d):
                out[..., :, a, b] = self._entry(a, b).gradient(torus)
        return out


@dataclass(frozen=True)
class ContinuumState:
    """A smooth (h, Π) pair that can be sampled on any torus."""

    h: SymTrig
    Pi: SymTrig
    chiP: Optional[VectorTrig] = None

    @property
    def d(self) -> int:
        return self.h.d


def random_metric(rng: np.random.Generator, d: int, amplitude: float = 0.3) -> SymTrig:
    """δ plus a symmetric perturbation whose eigenvalues stay above 1/2."""
    wobble = SymTrig.random(rng, d, amplitude=amplitude)
    bound = wobble.gershgorin()
    if bound > 0.45:
        wobble = wobble.scaled(0.45 / bound)
    return SymTrig.identity(d).plus(wobble)


def random_continuum_state(rng: np.random.Generator, d: int) -> ContinuumState:
    return ContinuumState(h=random_metric(rng, d), Pi=SymTrig.random(rng, d, amplitude=0.5))


def conformal_factor(d: int, amplitude: float = 0.1, wave: int = 1) -> TrigField:
    """λ = a sin(2π k x_1); the metric e^{2λ}δ is sampled by ``conformal_values``."""
    return TrigField(d, (((wave,) + (0,) * (d - 1), 0.0, amplitude),))


def conformal_values(torus: Torus, lam: TrigField) -> np.ndarray:
    factor = np.exp(2.0 * lam.values(torus))
    return factor[..., None, None] * np.eye(torus.d)
