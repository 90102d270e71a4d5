"""Curvature and Lie derivatives on the periodic lattice.

Every function here works on ``OddCoefficient`` fields, so the same code
evaluates plain lattice data (m = 0) and data shifted by odd parameters.
Index order in stored arrays: ``dh[..., c, a, b] = ∂_c h_ab``,
``Gamma[..., k, a, b] = Γ^k_ab``, ``dX[..., c, a] = ∂_c X^a``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.lattice.odd import OddCoefficient, einsum, stack
from src.lattice.state import LatticeState
from src.lattice.torus import Torus
from src.utils.reliability import NonSPDError, UnsupportedKindError

logger = logging.getLogger(__name__)

Field = Union[OddCoefficient, np.ndarray]

LIE_KINDS = ("scalar", "vector", "metric", "sym2_density", "scalar_density", "form_density")


def check_spd(h: OddCoefficient):
    eigen = np.linalg.eigvalsh(h.body)
    bad = np.argwhere(eigen.min(axis=-1) <= 0.0)
    if len(bad):
        site = tuple(int(i) for i in bad[0])
        logger.error(f"metric lost positivity at site {site} ({len(bad)} sites in total)")
        raise NonSPDError(site)


def gradient(torus: Torus, f: OddCoefficient) -> OddCoefficient:
    """Appends a derivative index last: ``out[..., c] = ∂_c f``."""
    return stack([f.partial(torus, c) for c in range(torus.d)], axis=-1)


def derivative(torus: Torus, f: OddCoefficient, rank: int) -> OddCoefficient:
    """Puts the derivative index in front of ``rank`` tensor indices."""
    return stack([f.partial(torus, c) for c in range(torus.d)], axis=-1 - rank)


@dataclass
class CurvaturePack:
    torus: Torus
    h: OddCoefficient
    hinv: OddCoefficient
    vol: OddCoefficient
    dh: OddCoefficient
    Gamma_lower: OddCoefficient
    Gamma: OddCoefficient
    dGamma: OddCoefficient
    Ric: OddCoefficient
    R: OddCoefficient
    K: Optional[OddCoefficient] = None

    @property
    def G(self) -> OddCoefficient:
        return self.Ric - einsum("...ab,...->...ab", self.h, self.R) * 0.5

    def raise_both(self, t: Field) -> OddCoefficient:
        return einsum("...ac,...cb->...ab", einsum("...ac,...cd->...ad", self.hinv, t), self.hinv)

    def hessian(self, phi: Field) -> OddCoefficient:
        """∇_a∇_b φ."""
        phi = OddCoefficient.wrap(phi)
        dphi = gradient(self.torus, phi)
        ddphi = derivative(self.torus, dphi, 1)
        return ddphi - einsum("...kab,...k->...ab", self.Gamma, dphi)

    def laplacian(self, phi: Field) -> OddCoefficient:
        return einsum("...ab,...ab->...", self.hinv, self.hessian(phi))

    def D(self, phi: Field) -> OddCoefficient:
        """D_h(φ) = −∇∇φ + h Δφ."""
        hess = self.hessian(phi)
        lap = einsum("...ab,...ab->...", self.hinv, hess)
        return einsum("...ab,...->...ab", self.h, lap) - hess


def curvature(torus: Torus, h: Field) -> CurvaturePack:
    h = OddCoefficient.wrap(h)
    check_spd(h)
    hinv = h.matrix_inverse()
    vol = h.determinant().power(0.5)
    dh = derivative(torus, h, 2)
    gamma_lower = (dh.transpose("...abc->...cab") + dh.transpose("...bac->...cab") - dh) * 0.5
    gamma = einsum("...kc,...cab->...kab", hinv, gamma_lower)
    dgamma = derivative(torus, gamma, 3)
    ric = (dgamma.transpose("...kkab->...ab")
           - dgamma.transpose("...bkak->...ab")
           + einsum("...kkl,...lab->...ab", gamma, gamma)
           - einsum("...kbl,...lak->...ab", gamma, gamma))
    r = einsum("...ab,...ab->...", hinv, ric)
    return CurvaturePack(torus, h, hinv, vol, dh, gamma_lower, gamma, dgamma, ric, r)


def compute_curvature(state: LatticeState) -> CurvaturePack:
    """Curvature of h plus K = −(Π♭♭ − h TrΠ/(d−1))/vol."""
    pack = curvature(state.torus, state.h)
    h, pi = pack.h, state.Pi
    pi_flat = einsum("...ac,...cb->...ab", einsum("...ac,...cd->...ad", h, pi), h)
    trace = einsum("...ab,...ab->...", h, pi)
    inv_vol = pack.vol.power(-1.0)
    traceless = pi_flat - einsum("...ab,...->...ab", h, trace) * (1.0 / (state.torus.d - 1))
    pack.K = -einsum("...,...ab->...ab", inv_vol, traceless)
    return pack


def _parity(x: OddCoefficient) -> int:
    return 0 if x.is_even() else 1


def lie_derivative(torus: Torus, kind: str, X: Field, T: Field) -> OddCoefficient:
    """L_X T in coordinates; X is written to the left of T in every product."""
    if kind not in LIE_KINDS:
        raise UnsupportedKindError(kind)
    X = OddCoefficient.wrap(X)
    T = OddCoefficient.wrap(T)
    dX = derivative(torus, X, 1)
    div = dX.transpose("...cc->...")

    if kind == "scalar":
        return einsum("...c,...c->...", X, gradient(torus, T))
    if kind == "scalar_density":
        return einsum("...c,...c->...", X, gradient(torus, T)) + einsum("...,...->...", div, T)
    if kind == "vector":
        sign = -1.0 if _parity(X) and _parity(T) else 1.0
        dT = derivative(torus, T, 1)
        return einsum("...c,...ca->...a", X, dT) - einsum("...c,...ca->...a", T, dX) * sign
    if kind == "form_density":
        dT = derivative(torus, T, 1)
        return (einsum("...c,...ca->...a", X, dT)
                + einsum("...ac,...c->...a", dX, T)
                + einsum("...,...a->...a", div, T))
    dT = derivative(torus, T, 2)
    if kind == "metric":
        return (einsum("...c,...cab->...ab", X, dT)
                + einsum("...ac,...cb->...ab", dX, T)
                + einsum("...bc,...ac->...ab", dX, T))
    return (einsum("...c,...cab->...ab", X, dT)
            - einsum("...ca,...cb->...ab", dX, T)
            - einsum("...cb,...ac->...ab", dX, T)
            + einsum("...,...ab->...ab", div, T))


def lie_bracket(torus: Torus, X: Field, Y: Field) -> OddCoefficient:
    return lie_derivative(torus, "vector", X, Y)
