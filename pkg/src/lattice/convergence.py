"""Convergence tables: defect norms per N and fitted orders."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.config import config
from src.lattice.torus import Torus
from src.utils.reliability import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergenceRow:
    check: str
    N: int
    defect_norm: float
    est_order: Optional[float]


def validate_sizes(sizes: Sequence[int]) -> List[int]:
    sizes = sorted(int(n) for n in sizes)
    if len(sizes) < 3:
        raise ConfigurationError(f"a convergence study needs at least 3 lattice sizes, got {sizes}")
    if sizes[0] < 4:
        raise ConfigurationError(f"lattice sizes must be >= 4, got {sizes}")
    if len(set(sizes)) != len(sizes):
        raise ConfigurationError(f"lattice sizes must be distinct, got {sizes}")
    return sizes


@dataclass
class ConvergenceStudy:
    """Defects of one continuum identity across lattice sizes.

    Passes when the least-squares slope of log(defect) against log(N) lies in
    the order band, or when every defect is below the round-off floor (then
    no order is fitted). With ``fit="finest"`` only the two finest resolved
    sizes enter the slope, for identities whose coarse grids are not yet
    asymptotic.
    """

    name: str
    sizes: List[int]
    defects: List[float]
    band: Tuple[float, float] = field(default_factory=lambda: config.order_band)
    floor: float = field(default_factory=lambda: config.ROUNDOFF_FLOOR)
    expect_convergence: bool = True
    fit: str = "all"

    @property
    def roundoff(self) -> bool:
        return all(d < self.floor for d in self.defects)

    def _resolved(self) -> List[Tuple[int, float]]:
        return [(n, d) for n, d in zip(self.sizes, self.defects) if d >= self.floor]

    @property
    def fitted_order(self) -> Optional[float]:
        points = self._resolved()
        if self.fit == "finest":
            points = points[-2:]
        if len(points) < 2:
            return None
        ns, ds = zip(*points)
        slope = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(ds)), 1)[0]
        return float(-slope)

    @property
    def passed(self) -> bool:
        if not self.expect_convergence:
            order = self.fitted_order
            return not self.roundoff and (order is None or order < self.band[0])
        if self.roundoff:
            return True
        order = self.fitted_order
        return order is not None and self.band[0] <= order <= self.band[1]

    @property
    def rows(self) -> List[ConvergenceRow]:
        out = []
        previous = None
        for n, d in zip(self.sizes, self.defects):
            order = None
            if previous is not None and d >= self.floor and previous[1] >= self.floor:
                order = float(np.log(previous[1] / d) / np.log(n / previous[0]))
            out.append(ConvergenceRow(self.name, n, float(d), order))
            previous = (n, d)
        return out

    def describe(self) -> str:
        if self.roundoff:
            return f"{self.name}: all defects below {self.floor:g} (round-off), order fit skipped"
        order = self.fitted_order
        shown = "n/a" if order is None else f"{order:.2f}"
        basis = " (finest pair)" if self.fit == "finest" else ""
        return f"{self.name}: fitted order{basis} {shown}, finest defect {self.defects[-1]:.3e}"


def run_study(name: str, sizes: Sequence[int], d: int, defect: Callable[[Torus], float],
              **options) -> ConvergenceStudy:
    sizes = validate_sizes(sizes)
    defects = []
    for n in sizes:
        value = float(defect(Torus(d, n)))
        logger.debug(f"{name}: N={n} defect={value:.3e}")
        defects.append(value)
    study = ConvergenceStudy(name, sizes, defects, **options)
    logger.info(study.describe())
    return study
