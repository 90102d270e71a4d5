"""The BFV vector field on the lattice ghost sector.

Ghosts are polarized in odd parameters ε_1..ε_k (generator slots 1..k of
``OddCoefficient``; slot 0 is θ): ξⁿ = Σ_a ε_a φ_a and ξ^∂ = Σ_a ε_a X_a.
Q² is obtained without a second hand-written formula: shifting every field
by θ·Q(field) and applying Q again gives Q(z + θQz) = Q(z) + θ·Q²(z).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from src.lattice.brackets import hamiltonian_flow
from src.lattice.constraints import energy_density, momentum_covector
from src.lattice.fields import ContinuumState, TrigField, VectorTrig
from src.lattice.geometry import CurvaturePack, curvature, derivative, gradient, lie_derivative
from src.lattice.odd import OddCoefficient, einsum, mask
from src.lattice.state import LatticeState
from src.lattice.torus import Torus
from src.utils.reliability import ConfigurationError, OddParameterError

logger = logging.getLogger(__name__)

LIE_SIGN_NOTE = ("lattice Q uses the Lie derivative term +L_{xi_d} in Q(h) and Q(Pi): "
                 "with Q(xi_d) = xiN grad xiN + 1/2[xi_d, xi_d] the pure xi_d part of Q^2(h) "
                 "is (s - s^2)/2 L_[xi_d,xi_d] h, zero only for s = +1")
FLOW_SIGN_NOTE = "Q(h), Q(Pi) are the hamiltonian flow of Hn(xiN) + Hd(xi_d): dPi = -Pit xiN - vol(G xiN + Dh(xiN)) + L Pi"

PAIR = mask(1, 2)
TRIPLE = mask(1, 2, 3)


def polarize(parts: Sequence[np.ndarray], k: int) -> OddCoefficient:
    """Σ_a ε_a · parts[a] in the algebra with θ plus k parameters."""
    if len(parts) > k:
        raise OddParameterError(k, len(parts))
    m = k + 1
    out = OddCoefficient.zeros(np.shape(parts[0]), m)
    for a, part in enumerate(parts):
        out = out + OddCoefficient.monomial([a + 1], part, m)
    return out


def symmetric_product(a: OddCoefficient, b: OddCoefficient) -> OddCoefficient:
    """a ⊗_s b = ½(a⊗b + b⊗a) for covectors, a written to the left."""
    return (einsum("...a,...b->...ab", a, b) + einsum("...b,...a->...ab", a, b)) * 0.5


def anchor_term(state: LatticeState, pack: CurvaturePack) -> OddCoefficient:
    """−(χ_∂ ⊗_s dξⁿ)^♯♯ ξⁿ."""
    xi_n = state.ghost("xiN")
    tensor = symmetric_product(state.ghost("chiP"), gradient(state.torus, xi_n))
    return -einsum("...ab,...->...ab", pack.raise_both(tensor), xi_n)


def apply_q(state: LatticeState, which: str = "Q0", lie_sign: float = 1.0) -> Dict[str, OddCoefficient]:
    """Images of every field under Q_BFV ("BFV") or its zero-section part ("Q0")."""
    if which not in ("Q0", "BFV"):
        raise ConfigurationError(f"unknown lattice vector field {which!r}; use Q0 or BFV")
    torus = state.torus
    pack = curvature(torus, state.h)
    xi_n, xi_p = state.ghost("xiN"), state.ghost("xiP")
    grad_xi_n = einsum("...ab,...b->...a", pack.hinv, gradient(torus, xi_n))

    images = {
        "xiN": lie_derivative(torus, "scalar", xi_p, xi_n),
        "xiP": (einsum("...,...a->...a", xi_n, grad_xi_n)
                + einsum("...c,...ca->...a", xi_p, derivative(torus, xi_p, 1))),
    }
    images["h"], images["Pi"] = hamiltonian_flow(state, xi_n, xi_p, "geometric", lie_sign, pack)

    constraint_n = energy_density(state, pack)
    constraint_p = momentum_covector(state)
    if which == "Q0":
        images["chiN"], images["chiP"] = constraint_n, constraint_p
        return images

    chi_n, chi_p = state.ghost("chiN"), state.ghost("chiP")
    images["Pi"] = images["Pi"] + anchor_term(state, pack)
    images["chiP"] = (constraint_p
                      + lie_derivative(torus, "form_density", xi_p, chi_p)
                      - einsum("...,...a->...a", chi_n, gradient(torus, xi_n)))
    chi_sharp = einsum("...ab,...b->...a", pack.hinv, chi_p)
    half = pack.vol.power(0.5)
    weighted = einsum("...,...->...", xi_n, pack.vol.power(-0.5))
    images["chiN"] = (constraint_n
                      + lie_derivative(torus, "scalar_density", xi_p, chi_n)
                      - einsum("...,...->...", lie_derivative(torus, "scalar", chi_sharp, weighted), half) * 2.0)
    return images


def q_square(state: LatticeState, which: str = "Q0", lie_sign: float = 1.0) -> Dict[str, OddCoefficient]:
    if state.m < 1:
        state = state.lifted(1)
    first = apply_q(state, which, lie_sign)
    shifted = {}
    for name, image in first.items():
        base = state.ghost(name) if name in ("xiN", "xiP", "chiN", "chiP") else getattr(state, name)
        shifted[name] = base + image.theta_times()
    second = apply_q(state.replace(**shifted), which, lie_sign)
    return {name: image.theta_part() for name, image in second.items()}


@dataclass(frozen=True)
class GhostTestData:
    phis: Tuple[TrigField, ...]
    Xs: Tuple[VectorTrig, ...]

    @classmethod
    def random(cls, rng: np.random.Generator, d: int, k: int) -> "GhostTestData":
        return cls(tuple(TrigField.random(rng, d) for _ in range(k)),
                   tuple(VectorTrig.random(rng, d, amplitude=0.5) for _ in range(k)))

    def ghosts(self, torus: Torus, k: int) -> Tuple[OddCoefficient, OddCoefficient]:
        xi_n = polarize([f.values(torus) for f in self.phis], k)
        xi_p = polarize([X.values(torus) for X in self.Xs], k)
        return xi_n, xi_p


def _w_exact(torus: Torus, hinv: np.ndarray, f1: TrigField, f2: TrigField) -> np.ndarray:
    """h⁻¹(f₁df₂ − f₂df₁) from exact derivatives."""
    u = f1.values(torus)[..., None] * f2.gradient(torus) - f2.values(torus)[..., None] * f1.gradient(torus)
    return np.einsum("...ab,...b->...a", hinv, u)


def momentum_covector_exact(continuum: ContinuumState, torus: Torus) -> np.ndarray:
    h, pi = continuum.h.values(torus), continuum.Pi.values(torus)
    dh, dpi = continuum.h.gradient(torus), continuum.Pi.gradient(torus)
    first = np.einsum("...ab,...cab->...c", pi, dh)
    div = np.einsum("...aab,...bc->...c", dpi, h) + np.einsum("...ab,...abc->...c", pi, dh)
    return first - 2.0 * div


def pi_defect_target(continuum: ContinuumState, tests: GhostTestData, torus: Torus) -> np.ndarray:
    """ε₁ε₂ part of Q₀²(Π): −½(𝓗^c w^d + w^c 𝓗^d)."""
    hinv = np.linalg.inv(continuum.h.values(torus))
    raised = np.einsum("...ab,...b->...a", hinv, momentum_covector_exact(continuum, torus))
    w = _w_exact(torus, hinv, tests.phis[0], tests.phis[1])
    return -0.5 * (np.einsum("...c,...d->...cd", raised, w) + np.einsum("...c,...d->...cd", w, raised))


def q0_square_components(continuum: ContinuumState, tests: GhostTestData, torus: Torus, k: int,
                         lie_sign: float = 1.0) -> Dict[str, np.ndarray]:
    """Multilinear components of Q₀² on each field, as per-site arrays.

    h, Pi_raw: ε₁ε₂ component; Pi: Pi_raw minus its bilinear target;
    Pi_target: the target itself.
    xiN, xiP: ε₁ε₂ε₃ component when k >= 3, otherwise the ε₁ε₂ one,
    which vanishes by degree.
    """
    if k < 2:
        raise OddParameterError(k, 2)
    state = LatticeState.sample(torus, continuum, m=k + 1)
    xi_n, xi_p = tests.ghosts(torus, k)
    square = q_square(state.replace(xiN=xi_n, xiP=xi_p), "Q0", lie_sign)
    ghost_mask = TRIPLE if k >= 3 else PAIR
    raw = square["Pi"].component(PAIR)
    target = pi_defect_target(continuum, tests, torus)
    return {
        "h": square["h"].component(PAIR),
        "Pi_raw": raw,
        "Pi_target": target,
        "Pi": raw - target,
        "xiN": square["xiN"].component(ghost_mask),
        "xiP": square["xiP"].component(ghost_mask),
    }


def q0_defect_components(continuum: ContinuumState, tests: GhostTestData, torus: Torus, k: int,
                         lie_sign: float = 1.0) -> Dict[str, float]:
    """RMS of each array of ``q0_square_components``."""
    arrays = q0_square_components(continuum, tests, torus, k, lie_sign)
    return {name: torus.rms(values) for name, values in arrays.items()}


def anchor_defect(continuum: ContinuumState, f1: TrigField, f2: TrigField, torus: Torus,
                  k: int = 2) -> Tuple[float, float]:
    """RMS of (χ-part of Q(Π))_{ε₁ε₂} − χ^♯ ⊗_s (f₁ grad f₂ − f₂ grad f₁), and of the target."""
    if k < 2:
        raise OddParameterError(k, 2)
    if continuum.chiP is None:
        raise ConfigurationError("the anchor check needs chi_d test data")
    state = LatticeState.sample(torus, continuum, m=k + 1)
    state = state.replace(xiN=polarize([f1.values(torus), f2.values(torus)], k))
    extracted = (apply_q(state, "BFV")["Pi"] - apply_q(state, "Q0")["Pi"]).component(PAIR)

    hinv = np.linalg.inv(continuum.h.values(torus))
    chi_sharp = np.einsum("...ab,...b->...a", hinv, continuum.chiP.values(torus))
    w = _w_exact(torus, hinv, f1, f2)
    target = 0.5 * (np.einsum("...c,...d->...cd", chi_sharp, w) + np.einsum("...c,...d->...cd", w, chi_sharp))
    return torus.rms(extracted - target), torus.rms(target)

