"""ADM constraint densities and their smeared functionals.

H_n = (Tr_h[Π²] − Tr_hΠ²/(d−1))/vol − vol·R   (scalar density)
𝓗_c = Π^{ab}∂_c h_ab − 2∂_a(Π^{ab}h_bc)        (covector density, ∫X^c𝓗_c = 𝕳_∂(X))
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.lattice.geometry import CurvaturePack, curvature, derivative, lie_derivative
from src.lattice.odd import OddCoefficient, einsum
from src.lattice.state import LatticeState

Smearing = Union[OddCoefficient, np.ndarray]


@dataclass
class KineticTerms:
    trace: OddCoefficient
    trace_sq: OddCoefficient
    inv_vol: OddCoefficient
    density: OddCoefficient
    h_tilde: OddCoefficient
    Pi_tilde: OddCoefficient


def kinetic_terms(state: LatticeState, pack: Optional[CurvaturePack] = None) -> KineticTerms:
    """T = (Tr[Π²] − TrΠ²/(d−1))/vol with h̃ = ∂T/∂Π and Π̃ = ∂T/∂h."""
    pack = pack or curvature(state.torus, state.h)
    h, pi, hinv = pack.h, state.Pi, pack.hinv
    scale = 1.0 / (state.torus.d - 1)
    h_pi = einsum("...ac,...cb->...ab", h, pi)
    pi_flat = einsum("...ac,...cb->...ab", h_pi, h)
    pi_h_pi = einsum("...ac,...cb->...ab", pi, einsum("...ac,...cb->...ab", h, pi))
    trace = h_pi.transpose("...aa->...")
    trace_sq = einsum("...ab,...ab->...", pi_flat, pi)
    inv_vol = pack.vol.power(-1.0)
    bracket = trace_sq - trace * trace * scale
    h_tilde = einsum("...,...ab->...ab", inv_vol, pi_flat - einsum("...ab,...->...ab", h, trace) * scale) * 2.0
    pi_tilde = (einsum("...,...ab->...ab", inv_vol * bracket, hinv) * -0.5
                + einsum("...,...ab->...ab", inv_vol,
                         pi_h_pi - einsum("...ab,...->...ab", pi, trace) * scale) * 2.0)
    return KineticTerms(trace, trace_sq, inv_vol, inv_vol * bracket, h_tilde, pi_tilde)


def energy_density(state: LatticeState, pack: Optional[CurvaturePack] = None) -> OddCoefficient:
    pack = pack or curvature(state.torus, state.h)
    return kinetic_terms(state, pack).density - pack.vol * pack.R


def momentum_covector(state: LatticeState) -> OddCoefficient:
    torus, h, pi = state.torus, OddCoefficient.wrap(state.h), state.Pi
    dh = derivative(torus, h, 2)
    first = einsum("...ab,...cab->...c", pi, dh)
    flux = einsum("...ab,...bc->...ac", pi, h)
    div = derivative(torus, flux, 2).transpose("...aac->...c")
    return first - div * 2.0


def constraint_density(state: LatticeState, phi: Optional[Smearing] = None,
                       X: Optional[Smearing] = None,
                       pack: Optional[CurvaturePack] = None) -> OddCoefficient:
    """φ·H_n or ⟨Π, L_X h⟩ per site; exactly one of φ, X."""
    if (phi is None) == (X is None):
        raise ValueError("pass exactly one of phi (energy) or X (momentum)")
    if phi is not None:
        return OddCoefficient.wrap(phi) * energy_density(state, pack)
    lie_h = lie_derivative(state.torus, "metric", X, state.h)
    return einsum("...ab,...ab->...", state.Pi, lie_h)


def constraint_functional(state: LatticeState, phi: Optional[Smearing] = None,
                          X: Optional[Smearing] = None,
                          pack: Optional[CurvaturePack] = None) -> float:
    """Lattice sum × Δx^d of the density; real states only."""
    density = constraint_density(state, phi=phi, X=X, pack=pack)
    return state.torus.integrate(density.body)
