"""Lattice field content: metric, momentum density and the ghost sector."""

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.lattice.fields import ContinuumState
from src.lattice.odd import OddCoefficient
from src.lattice.torus import Torus

GHOST_FIELDS = ("xiN", "xiP", "chiN", "chiP")

# tensor rank per field, for building zero ghosts
RANKS = {"h": 2, "Pi": 2, "xiN": 0, "xiP": 1, "chiN": 0, "chiP": 1}


@dataclass
class LatticeState:
    """h is a metric (weight 0); Pi, chiN and chiP are coordinate densities of weight 1."""

    torus: Torus
    h: OddCoefficient
    Pi: OddCoefficient
    xiN: Optional[OddCoefficient] = None
    xiP: Optional[OddCoefficient] = None
    chiN: Optional[OddCoefficient] = None
    chiP: Optional[OddCoefficient] = None

    @classmethod
    def from_arrays(cls, torus: Torus, h: np.ndarray, Pi: np.ndarray, **ghosts) -> "LatticeState":
        return cls(torus, OddCoefficient.even(h), OddCoefficient.even(Pi), **ghosts)

    @classmethod
    def sample(cls, torus: Torus, continuum: ContinuumState, m: int = 0) -> "LatticeState":
        state = cls.from_arrays(torus, continuum.h.values(torus), continuum.Pi.values(torus))
        if continuum.chiP is not None:
            state.chiP = OddCoefficient.even(continuum.chiP.values(torus), m)
        return state.lifted(m)

    @classmethod
    def flat(cls, torus: Torus) -> "LatticeState":
        eye = np.broadcast_to(np.eye(torus.d), torus.grid + (torus.d, torus.d)).copy()
        return cls.from_arrays(torus, eye, np.zeros_like(eye))

    @property
    def m(self) -> int:
        return max(f.m for f in self.fields().values())

    def fields(self) -> Dict[str, OddCoefficient]:
        out = {"h": self.h, "Pi": self.Pi}
        for name in GHOST_FIELDS:
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    def ghost(self, name: str) -> OddCoefficient:
        """The named ghost, or zero when the sector is unpopulated."""
        value = getattr(self, name)
        if value is None:
            shape = self.torus.grid + (self.torus.d,) * RANKS[name]
            return OddCoefficient.zeros(shape, self.m)
        return value

    def replace(self, **changes) -> "LatticeState":
        return dataclasses.replace(self, **changes)

    def lifted(self, m: int) -> "LatticeState":
        return self.replace(**{k: v.lift(max(m, v.m)) for k, v in self.fields().items()})
