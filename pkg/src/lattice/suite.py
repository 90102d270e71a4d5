"""
The lattice checks: each one runs convergence studies of a continuum
identity (or the fd oracle) and folds them into a ``LatticeResult``.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from src.config import config
from src.lattice.brackets import (
    RELATIONS,
    BracketTestData,
    ConstraintFunctional,
    compare_with_oracle,
    flow_scheme_gap,
    relation_defects,
)
from src.lattice.convergence import ConvergenceRow, ConvergenceStudy, run_study, validate_sizes
from src.lattice.fields import (
    ContinuumState,
    SymTrig,
    TrigField,
    VectorTrig,
    conformal_factor,
    conformal_values,
    random_continuum_state,
    random_metric,
)
from src.lattice.geometry import curvature
from src.lattice.ghosts import FLOW_SIGN_NOTE, LIE_SIGN_NOTE, GhostTestData, anchor_defect, q0_square_components
from src.lattice.state import LatticeState
from src.lattice.torus import Torus
from src.utils.reliability import ConfigurationError, OddParameterError, UnknownCheckError

logger = logging.getLogger(__name__)

CONVENTION_NOTES = [
    LIE_SIGN_NOTE,
    FLOW_SIGN_NOTE,
    "bracket {F,G} = sum(dF/dh dG/dPi - dF/dPi dG/dh) dx^d; Hn = (Tr[Pi^2] - TrPi^2/(d-1))/vol - vol R",
    "functional derivatives are site derivatives / dx^d; off-diagonal components carry multiplicity 2",
]

ORACLE_SIZE = 8
ORACLE_DIM = 2
# momentum scales for the Q0^2(Pi) defect; 0 is on shell
MOMENTUM_SCALES = (1.0, 0.5, 0.0)
# allowed relative departure of the Pi -> Pi/2 response ratio from 2
LINEAR_RESPONSE_TOLERANCE = 0.25


@dataclass(frozen=True)
class LatticeSettings:
    d: int = field(default_factory=lambda: config.LATTICE_DIM)
    sizes: tuple = field(default_factory=lambda: tuple(config.lattice_sizes))
    seed: int = field(default_factory=lambda: config.SEED)
    fd_step: Optional[float] = field(default_factory=lambda: config.FD_STEP)
    k: int = field(default_factory=lambda: config.ODD_PARAMETERS)
    oracle_states: int = field(default_factory=lambda: config.ORACLE_STATES)
    tolerance: float = field(default_factory=lambda: config.ORACLE_TOLERANCE)

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigurationError(f"lattice dimension must be 2 or 3, got {self.d}")
        validate_sizes(self.sizes)
        if not 1 <= self.k <= 3:
            raise ConfigurationError(f"k must be between 1 and 3, got {self.k}")

    def rng(self, salt: int) -> np.random.Generator:
        """Independent stream per check so results do not depend on run order."""
        return np.random.default_rng([self.seed, salt])


@dataclass
class LatticeResult:
    check_id: str
    passed: bool
    studies: List[ConvergenceStudy] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    extra_rows: List[ConvergenceRow] = field(default_factory=list)

    @property
    def rows(self) -> List[ConvergenceRow]:
        out = [row for study in self.studies for row in study.rows]
        return out + self.extra_rows

    @property
    def max_residual(self) -> float:
        values = [row.defect_norm for row in self.rows]
        return max(values) if values else 0.0

    @property
    def est_order(self) -> Optional[float]:
        orders = [s.fitted_order for s in self.studies if s.expect_convergence and s.fitted_order is not None]
        return min(orders) if orders else None


def _result(check_id: str, studies: List[ConvergenceStudy], notes: List[str] = None) -> LatticeResult:
    notes = [s.describe() for s in studies] + list(notes or [])
    return LatticeResult(check_id, all(s.passed for s in studies), studies, notes)


def check_curvature(settings: LatticeSettings) -> LatticeResult:
    d = settings.d
    lam = conformal_factor(d)

    def conformal(torus: Torus) -> float:
        pack = curvature(torus, conformal_values(torus, lam))
        lam_v, grad, lap = lam.values(torus), lam.gradient(torus), lam.laplacian(torus)
        exact = -np.exp(-2.0 * lam_v) * (2.0 * (d - 1) * lap + (d - 1) * (d - 2) * np.sum(grad ** 2, axis=-1))
        return torus.rms(pack.R.body - exact)

    def flat(torus: Torus) -> float:
        pack = curvature(torus, LatticeState.flat(torus).h)
        return float(max(np.max(np.abs(pack.R.body)), np.max(np.abs(pack.Gamma.body)), np.max(np.abs(pack.vol.body - 1.0))))

    studies = [
        run_study("curvature:conformal", settings.sizes, d, conformal),
        run_study("curvature:flat", settings.sizes, d, flat),
    ]
    notes = []
    if d == 2:
        metric = random_continuum_state(settings.rng(1), d).h
        studies.append(run_study("curvature:einstein-2d", settings.sizes, d,
                                 lambda torus: torus.rms(curvature(torus, metric.values(torus)).G.body)))
    else:
        notes.append("Einstein tensor vanishing is a d = 2 identity; skipped for d = 3")
    return _result("curvature", studies, notes)


def check_brackets(settings: LatticeSettings) -> LatticeResult:
    rng = settings.rng(2)
    continuum = random_continuum_state(rng, settings.d)
    tests = BracketTestData.random(rng, settings.d)
    cache: Dict[int, Dict[str, float]] = {}

    def defect(relation: str) -> Callable[[Torus], float]:
        def run(torus: Torus) -> float:
            if torus.N not in cache:
                cache[torus.N] = relation_defects(continuum, tests, torus)
            return cache[torus.N][relation]
        return run

    studies = [run_study(f"brackets:{r}", settings.sizes, settings.d, defect(r)) for r in RELATIONS]
    return _result("brackets", studies, [f"seed {settings.seed}; variational gradients"])


def check_oracle(settings: LatticeSettings) -> LatticeResult:
    rng = settings.rng(3)
    torus = Torus(ORACLE_DIM, ORACLE_SIZE)
    worst = worst_bracket = 0.0
    notes: List[str] = [f"oracle runs at d = {ORACLE_DIM}, N = {ORACLE_SIZE} over {settings.oracle_states} states"]
    rows = []
    for i in range(settings.oracle_states):
        continuum = random_continuum_state(rng, ORACLE_DIM)
        tests = BracketTestData.random(rng, ORACLE_DIM)
        state = LatticeState.sample(torus, continuum)
        Hx = ConstraintFunctional.momentum(tests.X.values(torus), "Hd(X)")
        Hy = ConstraintFunctional.momentum(tests.Y.values(torus), "Hd(Y)")
        Hphi = ConstraintFunctional.energy(tests.phi.values(torus), "Hn(phi)")
        Hpsi = ConstraintFunctional.energy(tests.psi.values(torus), "Hn(psi)")
        F, G = [(Hx, Hy), (Hx, Hphi), (Hphi, Hpsi)][i % 3]
        comparison = compare_with_oracle(F, G, state, rng, step=settings.fd_step)
        notes.extend(f"state {i}: {n}" for n in comparison.notes)
        logger.debug(f"oracle state {i} {F.label}/{G.label}: analytic {comparison.analytic:.6e} "
                     f"fd {comparison.fd:.6e} rel {comparison.relative_error:.2e} "
                     f"vs bracket {comparison.bracket_error:.2e}")
        worst = max(worst, comparison.relative_error)
        worst_bracket = max(worst_bracket, comparison.bracket_error)
        rows.append(ConvergenceRow(f"oracle:{F.label},{G.label}", ORACLE_SIZE, comparison.relative_error, None))
    passed = worst <= settings.tolerance
    notes.insert(0, f"worst disagreement {worst:.2e} relative to the summed absolute pairing contributions "
                    f"(tolerance {settings.tolerance:g}); {worst_bracket:.2e} relative to the bracket value")
    return LatticeResult("oracle", passed, [], notes, rows)


def check_flow_consistency(settings: LatticeSettings) -> LatticeResult:
    rng = settings.rng(4)
    continuum = random_continuum_state(rng, settings.d)
    phi, X = TrigField.random(rng, settings.d), VectorTrig.random(rng, settings.d)
    study = run_study("flow-consistency", settings.sizes, settings.d,
                      lambda torus: flow_scheme_gap(continuum, phi, X, torus))
    return _result("flow-consistency", [study], ["geometric minus variational hamiltonian flow"])


def check_q0defect(settings: LatticeSettings) -> LatticeResult:
    """Q₀² on the (h, Π, ξ) sector against its bilinear defect.

    The Π defect is proportional to the momentum constraint, which is linear
    in Π. The check scales Π by 1, 1/2 and 0 at fixed h: each scale must
    converge to its own target (zero at Π = 0), and on the finest grid the
    discrete Q₀²(Π) must respond linearly to the scale.
    """
    if settings.k < 2:
        raise OddParameterError(settings.k, 2)
    rng = settings.rng(5)
    d, k = settings.d, settings.k
    base = ContinuumState(h=random_metric(rng, d, amplitude=0.15), Pi=SymTrig.random(rng, d, amplitude=0.25))
    tests = GhostTestData.random(rng, d, k)
    states = {scale: ContinuumState(base.h, base.Pi.scaled(scale)) for scale in MOMENTUM_SCALES}
    cache: Dict[tuple, Dict[str, np.ndarray]] = {}

    def arrays(scale: float, torus: Torus, lie_sign: float = 1.0) -> Dict[str, np.ndarray]:
        key = (scale, lie_sign, torus.N)
        if key not in cache:
            cache[key] = q0_square_components(states[scale], tests, torus, k, lie_sign)
        return cache[key]

    def norm(which: str, scale: float = 1.0, lie_sign: float = 1.0):
        return lambda torus: torus.rms(arrays(scale, torus, lie_sign)[which])

    asymptotic = {"fit": "finest"}
    studies = [run_study(f"q0defect:{f}", settings.sizes, d, norm(f), **asymptotic)
               for f in ("h", "Pi", "xiN", "xiP")]
    studies.append(run_study("q0defect:Pi-half-momentum", settings.sizes, d, norm("Pi", 0.5), **asymptotic))
    studies.append(run_study("q0defect:Pi-on-shell", settings.sizes, d, norm("Pi", 0.0), **asymptotic))
    flipped = run_study("q0defect:h-flipped-lie-sign", settings.sizes, d, norm("h", 1.0, -1.0),
                       expect_convergence=False)
    studies.append(flipped)

    notes = ["Pi target: -1/2 (Hd^c w^d + w^c Hd^d), w = h^-1 (f1 df2 - f2 df1); "
             "Pi-half-momentum and Pi-on-shell scale Pi by 1/2 and 0 at fixed h"]
    if k < 3:
        notes.append("k = 2: the xiN, xiP components of Q0^2 are cubic in ghosts and vanish by degree")
    else:
        notes.append("k = 3: xiN, xiP rows are the eps1 eps2 eps3 components of Q0^2")
    notes.append(f"flipped Lie sign: Q0^2(h) finest defect {flipped.defects[-1]:.3e}, does not converge to 0")

    torus = Torus(d, max(settings.sizes))
    raw = {scale: arrays(scale, torus)["Pi_raw"] for scale in MOMENTUM_SCALES}
    full, half = torus.rms(raw[1.0] - raw[0.0]), torus.rms(raw[0.5] - raw[0.0])
    ratio = full / half if half > 0.0 else float("inf")
    linear = abs(ratio / 2.0 - 1.0) <= LINEAR_RESPONSE_TOLERANCE
    target = torus.rms(arrays(1.0, torus)["Pi_target"])
    notes.append(f"Q0^2(Pi) response to Pi -> Pi/2 at N={torus.N}: ratio {ratio:.3f} "
                 f"(2 expected, tolerance {LINEAR_RESPONSE_TOLERANCE:g}); target norm {target:.3e}, "
                 f"on-shell discretization residual {torus.rms(raw[0.0]):.3e}")
    result = _result("q0defect", studies, notes)
    result.passed = result.passed and linear
    return result


def check_anchor(settings: LatticeSettings) -> LatticeResult:
    if settings.k < 2:
        raise OddParameterError(settings.k, 2)
    rng = settings.rng(6)
    d = settings.d
    base = random_continuum_state(rng, d)
    continuum = ContinuumState(base.h, base.Pi, VectorTrig.random(rng, d))
    f1, f2 = TrigField.random(rng, d), TrigField.random(rng, d)
    targets: Dict[int, float] = {}

    def run(torus: Torus) -> float:
        defect, target = anchor_defect(continuum, f1, f2, torus, settings.k)
        targets[torus.N] = target
        return defect

    study = run_study("anchor", settings.sizes, d, run)
    scale = ", ".join(f"N={n}: {v:.3e}" for n, v in sorted(targets.items()))
    return _result("anchor", [study], [f"target norm {scale}"])


LATTICE_CHECKS: Dict[str, Callable[[LatticeSettings], LatticeResult]] = {
    "curvature": check_curvature,
    "brackets": check_brackets,
    "oracle": check_oracle,
    "flow-consistency": check_flow_consistency,
    "q0defect": check_q0defect,
    "anchor": check_anchor,
}

LATTICE_CHECK_IDS = list(LATTICE_CHECKS)


def run_lattice_check(check_id: str, settings: Optional[LatticeSettings] = None) -> LatticeResult:
    if check_id not in LATTICE_CHECKS:
        raise UnknownCheckError(check_id)
    settings = settings or LatticeSettings()
    result = LATTICE_CHECKS[check_id](settings)
    result.notes.extend(CONVENTION_NOTES)
    return result
