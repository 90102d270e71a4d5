"""Periodic unit torus with second-order central differences."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.utils.reliability import ConfigurationError


@dataclass(frozen=True)
class Torus:
    d: int
    N: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigurationError(f"lattice dimension must be 2 or 3, got {self.d}")
        if self.N < 4:
            raise ConfigurationError(f"lattice needs N >= 4 sites per axis, got {self.N}")

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def grid(self) -> Tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def cell(self) -> float:
        return self.dx ** self.d

    def coords(self) -> Tuple[np.ndarray, ...]:
        axis = np.arange(self.N) * self.dx
        return tuple(np.meshgrid(*([axis] * self.d), indexing="ij"))

    def partial(self, f: np.ndarray, axis: int, offset: int = 0) -> np.ndarray:
        """∂_axis f; spatial axes start at ``offset`` in f."""
        a = axis + offset
        return (np.roll(f, -1, axis=a) - np.roll(f, 1, axis=a)) / (2.0 * self.dx)

    def integrate(self, f: np.ndarray) -> float:
        """Σ f Δx^d over the grid, summing any component axes too."""
        return float(np.sum(f) * self.cell)

    def rms(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.mean(np.square(f))))
