"""Hamiltonian flows, the field Poisson bracket and its finite-difference oracle.

Bracket: {F,G} = Σ (δF/δh·δG/δΠ − δF/δΠ·δG/δh) Δx^d, full-matrix contraction.
The flow of G is δh = δG/δΠ, δΠ = −δG/δh.

Two gradient schemes:
  geometric    continuum formulas discretized with central differences
  variational  exact gradients of the discrete functionals (adjoint of the
               curvature chain), which is what the fd oracle measures
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import config
from src.lattice.constraints import constraint_functional, kinetic_terms
from src.lattice.fields import ContinuumState, TrigField, VectorTrig
from src.lattice.geometry import CurvaturePack, curvature, derivative, lie_derivative
from src.lattice.odd import OddCoefficient, einsum
from src.lattice.state import LatticeState
from src.lattice.torus import Torus

logger = logging.getLogger(__name__)

SCHEMES = ("geometric", "variational")
FD_SWEEP = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)


@dataclass(frozen=True)
class ConstraintFunctional:
    """𝕳_n(φ) (kind "energy") or 𝕳_∂(X) (kind "momentum") with fixed test data."""

    kind: str
    smearing: np.ndarray
    label: str = ""

    @classmethod
    def energy(cls, phi: np.ndarray, label: str = "Hn") -> "ConstraintFunctional":
        return cls("energy", np.asarray(phi, dtype=float), label)

    @classmethod
    def momentum(cls, X: np.ndarray, label: str = "Hd") -> "ConstraintFunctional":
        return cls("momentum", np.asarray(X, dtype=float), label)

    def value(self, state: LatticeState, pack: Optional[CurvaturePack] = None) -> float:
        if self.kind == "energy":
            return constraint_functional(state, phi=self.smearing, pack=pack)
        return constraint_functional(state, X=self.smearing)


def curvature_adjoint(pack: CurvaturePack, weight: np.ndarray) -> np.ndarray:
    """Symmetric gradient of Σ_sites w·vol·R with respect to h (reverse mode)."""
    torus = pack.torus
    d = torus.d
    hinv, vol = pack.hinv.body, pack.vol.body
    gl, gam, ric, r = pack.Gamma_lower.body, pack.Gamma.body, pack.Ric.body, pack.R.body

    r_bar = weight * vol
    vol_bar = weight * r
    ric_bar = r_bar[..., None, None] * hinv
    hinv_bar = r_bar[..., None, None] * ric

    # Ric_ab = ∂_kΓ^k_ab − ∂_bΓ^k_ak + Γ^k_kl Γ^l_ab − Γ^k_bl Γ^l_ak
    dgam_bar = np.zeros(torus.grid + (d,) * 4)
    for k in range(d):
        dgam_bar[..., k, k, :, :] += ric_bar
        for b in range(d):
            dgam_bar[..., b, k, :, k] -= ric_bar[..., :, b]
    trace_gam = np.einsum("...kkl->...l", gam)
    gam_bar = np.einsum("...l,...ab->...lab", trace_gam, ric_bar)
    contracted = np.einsum("...ab,...lab->...l", ric_bar, gam)
    for k in range(d):
        gam_bar[..., k, k, :] += contracted
    gam_bar -= np.einsum("...ab,...lak->...kbl", ric_bar, gam)
    gam_bar -= np.einsum("...ab,...kbl->...lak", ric_bar, gam)
    for m in range(d):
        gam_bar -= torus.partial(dgam_bar[..., m, :, :, :], m)

    # Γ^k_ab = h^{kc} Γ_cab
    hinv_bar += np.einsum("...kab,...cab->...kc", gam_bar, gl)
    gl_bar = np.einsum("...kc,...kab->...cab", hinv, gam_bar)

    # Γ_cab = ½(∂_a h_bc + ∂_b h_ac − ∂_c h_ab)
    dh_bar = 0.5 * (np.einsum("...zxy->...xyz", gl_bar) + np.einsum("...zyx->...xyz", gl_bar) - gl_bar)
    h_bar = np.zeros_like(hinv)
    for c in range(d):
        h_bar -= torus.partial(dh_bar[..., c, :, :], c)
    h_bar -= np.einsum("...ia,...ij,...jb->...ab", hinv, hinv_bar, hinv)
    h_bar += (0.5 * vol_bar * vol)[..., None, None] * hinv
    return 0.5 * (h_bar + np.swapaxes(h_bar, -1, -2))


def conservative_density_lie(torus: Torus, X, Pi) -> OddCoefficient:
    """∂_c(X^cΠ^ab) − ∂_cX^a Π^cb − ∂_cX^b Π^ac."""
    X = OddCoefficient.wrap(X)
    Pi = OddCoefficient.wrap(Pi)
    dX = derivative(torus, X, 1)
    flux = einsum("...c,...ab->...cab", X, Pi)
    return (derivative(torus, flux, 3).transpose("...ccab->...ab")
            - einsum("...ca,...cb->...ab", dX, Pi)
            - einsum("...cb,...ac->...ab", dX, Pi))


def energy_gradients(state: LatticeState, phi, scheme: str = "variational",
                     pack: Optional[CurvaturePack] = None) -> Tuple[OddCoefficient, OddCoefficient]:
    """(δ𝕳_n(φ)/δh, δ𝕳_n(φ)/δΠ) as densities."""
    pack = pack or curvature(state.torus, state.h)
    kin = kinetic_terms(state, pack)
    phi = OddCoefficient.wrap(phi)
    d_pi = einsum("...ab,...->...ab", kin.h_tilde, phi)
    d_h = einsum("...ab,...->...ab", kin.Pi_tilde, phi)
    if scheme == "variational":
        d_h = d_h - OddCoefficient.even(curvature_adjoint(pack, phi.body))
    else:
        sourced = einsum("...ab,...->...ab", pack.raise_both(pack.G), phi) + pack.raise_both(pack.D(phi))
        d_h = d_h + einsum("...,...ab->...ab", pack.vol, sourced)
    return d_h, d_pi


def momentum_gradients(state: LatticeState, X, scheme: str = "variational") -> Tuple[OddCoefficient, OddCoefficient]:
    """(δ𝕳_∂(X)/δh, δ𝕳_∂(X)/δΠ) as densities."""
    torus = state.torus
    d_pi = lie_derivative(torus, "metric", X, state.h)
    if scheme == "variational":
        d_h = -conservative_density_lie(torus, X, state.Pi)
    else:
        d_h = -lie_derivative(torus, "sym2_density", X, state.Pi)
    return d_h, d_pi


def functional_gradients(F: ConstraintFunctional, state: LatticeState, scheme: str = "variational",
                         pack: Optional[CurvaturePack] = None) -> Tuple[np.ndarray, np.ndarray]:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown gradient scheme {scheme!r}")
    if F.kind == "energy":
        d_h, d_pi = energy_gradients(state, F.smearing, scheme, pack)
    else:
        d_h, d_pi = momentum_gradients(state, F.smearing, scheme)
    return d_h.body, d_pi.body


def hamiltonian_flow(state: LatticeState, phi=None, X=None, scheme: str = "geometric",
                     lie_sign: float = 1.0,
                     pack: Optional[CurvaturePack] = None) -> Tuple[OddCoefficient, OddCoefficient]:
    """(δh, δΠ) along the flow of 𝕳_n(φ) + 𝕳_∂(X).

    δh = h̃φ + L_X h,  δΠ = −Π̃φ − vol(G^♯♯φ + D^♯♯(φ)) + L_XΠ.
    φ and X may carry odd parameters; ``lie_sign`` flips the L_X terms.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown gradient scheme {scheme!r}")
    shape_h = state.h.shape
    d_h = OddCoefficient.zeros(shape_h, state.m)
    d_pi = OddCoefficient.zeros(shape_h, state.m)
    if phi is not None:
        grad_h, grad_pi = energy_gradients(state, phi, scheme, pack)
        d_h = d_h + grad_pi
        d_pi = d_pi - grad_h
    if X is not None:
        grad_h, grad_pi = momentum_gradients(state, X, scheme)
        d_h = d_h + grad_pi * lie_sign
        d_pi = d_pi - grad_h * lie_sign
    return d_h, d_pi


def _pairing(torus: Torus, f: Tuple[np.ndarray, np.ndarray], g: Tuple[np.ndarray, np.ndarray]) -> Tuple[float, float]:
    """Bracket value and the sum of absolute contributions."""
    first = f[0] * g[1]
    second = f[1] * g[0]
    value = torus.integrate(first - second)
    scale = torus.integrate(np.abs(first) + np.abs(second))
    return value, scale


def fd_gradients(F: ConstraintFunctional, state: LatticeState, step: float) -> Tuple[np.ndarray, np.ndarray]:
    """Site-by-site central differences; off-diagonal pairs perturbed together."""
    torus = state.torus
    d = torus.d
    h0, pi0 = state.h.body, state.Pi.body
    out = []
    for which, base in (("h", h0), ("Pi", pi0)):
        grad = np.zeros_like(base)
        for site in np.ndindex(*torus.grid):
            for a in range(d):
                for b in range(a, d):
                    values = []
                    for s in (step, -step):
                        moved = base.copy()
                        moved[site + (a, b)] += s
                        if a != b:
                            moved[site + (b, a)] += s
                        trial = LatticeState.from_arrays(torus, moved, pi0) if which == "h" \
                            else LatticeState.from_arrays(torus, h0, moved)
                        values.append(F.value(trial))
                    slope = (values[0] - values[1]) / (2.0 * step)
                    if a != b:
                        slope /= 2.0
                    grad[site + (a, b)] = grad[site + (b, a)] = slope / torus.cell
        out.append(grad)
    return out[0], out[1]


@dataclass
class FdSweep:
    step: float
    estimates: Dict[float, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)


def select_fd_step(F: ConstraintFunctional, state: LatticeState, rng: np.random.Generator,
                   steps=FD_SWEEP) -> FdSweep:
    """Picks the step on the plateau of a directional-derivative sweep."""
    torus = state.torus
    h0, pi0 = state.h.body, state.Pi.body

    def sym(x):
        return 0.5 * (x + np.swapaxes(x, -1, -2))

    vh = sym(rng.standard_normal(h0.shape))
    vp = sym(rng.standard_normal(pi0.shape))

    def along(s):
        return F.value(LatticeState.from_arrays(torus, h0 + s * vh, pi0 + s * vp))

    estimates = {s: (along(s) - along(-s)) / (2.0 * s) for s in steps}
    values = [estimates[s] for s in steps]
    gaps = [abs(a - b) for a, b in zip(values, values[1:])]
    best = int(np.argmin(gaps))
    sweep = FdSweep(step=steps[best + 1], estimates=estimates)

    expected = (steps[0] ** 2 - steps[1] ** 2) / (steps[1] ** 2 - steps[2] ** 2)
    floor = 1e-13 * max(1.0, abs(values[-1]))
    if gaps[0] > floor and gaps[1] > floor:
        ratio = gaps[0] / gaps[1]
        if not expected / 3.0 <= ratio <= expected * 3.0:
            sweep.notes.append(f"non-quadratic fd error: ratio {ratio:.3g}, expected about {expected:.3g}")
    if best == len(gaps) - 1:
        sweep.notes.append("fd step underflow: error still falling at the smallest step")
    if best == 0:
        sweep.notes.append("fd step overflow: plateau at the largest step")
    for note in sweep.notes:
        logger.warning(f"{F.label}: {note}")
    logger.debug(f"{F.label}: fd step {sweep.step:g} selected")
    return sweep


def poisson_bracket(F: ConstraintFunctional, G: ConstraintFunctional, state: LatticeState,
                    mode: str = "analytic", step: Optional[float] = None,
                    scheme: str = "variational") -> float:
    if mode == "analytic":
        pack = curvature(state.torus, state.h)
        f = functional_gradients(F, state, scheme, pack)
        g = functional_gradients(G, state, scheme, pack)
    elif mode == "fd":
        step = step or config.FD_STEP or 1e-4
        f = fd_gradients(F, state, step)
        g = fd_gradients(G, state, step)
    else:
        raise ValueError(f"unknown bracket mode {mode!r}")
    return _pairing(state.torus, f, g)[0]


@dataclass
class OracleComparison:
    """relative_error is normalized by the summed absolute contributions to
    the pairing; bracket_error by the bracket value itself."""

    analytic: float
    fd: float
    relative_error: float
    bracket_error: float
    step: float
    notes: List[str] = field(default_factory=list)


def compare_with_oracle(F: ConstraintFunctional, G: ConstraintFunctional, state: LatticeState,
                        rng: np.random.Generator, step: Optional[float] = None) -> OracleComparison:
    """Analytic (variational) bracket against the brute-force fd bracket."""
    notes = []
    if step is None:
        sweep = select_fd_step(F, state, rng)
        step, notes = sweep.step, list(sweep.notes)
    pack = curvature(state.torus, state.h)
    f = functional_gradients(F, state, "variational", pack)
    g = functional_gradients(G, state, "variational", pack)
    analytic, scale = _pairing(state.torus, f, g)
    fd, _ = _pairing(state.torus, fd_gradients(F, state, step), fd_gradients(G, state, step))
    gap = abs(analytic - fd)
    relative = gap / max(scale, abs(analytic), abs(fd), 1e-300)
    bracket = gap / max(abs(analytic), abs(fd), 1e-300)
    return OracleComparison(analytic, fd, relative, bracket, step, notes)


@dataclass(frozen=True)
class BracketTestData:
    """Smooth smearings for the three bracket relations."""

    phi: TrigField
    psi: TrigField
    X: VectorTrig
    Y: VectorTrig

    @classmethod
    def random(cls, rng: np.random.Generator, d: int) -> "BracketTestData":
        return cls(TrigField.random(rng, d), TrigField.random(rng, d),
                   VectorTrig.random(rng, d), VectorTrig.random(rng, d))


RELATIONS = ("momentum-momentum", "momentum-energy", "energy-energy")


def relation_defects(continuum: ContinuumState, tests: BracketTestData, torus: Torus,
                     scheme: str = "variational") -> Dict[str, float]:
    """|LHS − RHS| for the three constraint-algebra relations on one grid.

    {𝕳_∂(X), 𝕳_∂(Y)} = 𝕳_∂([X,Y])
    {𝕳_∂(X), 𝕳_n(φ)} = 𝕳_n(X(φ))
    {𝕳_n(φ), 𝕳_n(ψ)} = 𝕳_∂(φ grad_h ψ − ψ grad_h φ), with h the lattice metric
    """
    state = LatticeState.sample(torus, continuum)
    pack = curvature(torus, state.h)
    phi, psi = tests.phi.values(torus), tests.psi.values(torus)
    dphi, dpsi = tests.phi.gradient(torus), tests.psi.gradient(torus)
    X, Y = tests.X.values(torus), tests.Y.values(torus)
    JX, JY = tests.X.jacobian(torus), tests.Y.jacobian(torus)

    Hx = ConstraintFunctional.momentum(X, "Hd(X)")
    Hy = ConstraintFunctional.momentum(Y, "Hd(Y)")
    Hphi = ConstraintFunctional.energy(phi, "Hn(phi)")
    Hpsi = ConstraintFunctional.energy(psi, "Hn(psi)")

    grads = {F.label: functional_gradients(F, state, scheme, pack) for F in (Hx, Hy, Hphi, Hpsi)}

    def bracket(F, G):
        return _pairing(torus, grads[F.label], grads[G.label])[0]

    commutator = np.einsum("...c,...ca->...a", X, JY) - np.einsum("...c,...ca->...a", Y, JX)
    x_of_phi = np.einsum("...c,...c->...", X, dphi)
    hinv = pack.hinv.body
    w = np.einsum("...ab,...b->...a", hinv, phi[..., None] * dpsi - psi[..., None] * dphi)

    return {
        "momentum-momentum": abs(bracket(Hx, Hy) - constraint_functional(state, X=commutator)),
        "momentum-energy": abs(bracket(Hx, Hphi) - constraint_functional(state, phi=x_of_phi, pack=pack)),
        "energy-energy": abs(bracket(Hphi, Hpsi) - constraint_functional(state, X=w)),
    }


def flow_scheme_gap(continuum: ContinuumState, phi: TrigField, X: VectorTrig, torus: Torus) -> float:
    """RMS difference between the geometric and variational flows."""
    state = LatticeState.sample(torus, continuum)
    pack = curvature(torus, state.h)
    phi_v, X_v = phi.values(torus), X.values(torus)
    geo = hamiltonian_flow(state, phi_v, X_v, "geometric", pack=pack)
    var = hamiltonian_flow(state, phi_v, X_v, "variational", pack=pack)
    gap_h = geo[0].body - var[0].body
    gap_pi = geo[1].body - var[1].body
    return float(np.sqrt(torus.rms(gap_h) ** 2 + torus.rms(gap_pi) ** 2))

