"""
The two candidate algebroid structures on the constraint bundle of a
first-class system (sections s = s^i u_i, u_i the unit sections).

Hamiltonian vector fields are X_i = {H_i, ·}. With the bracket orientation of
``bfv_finite`` this is the choice for which

    [X_i, X_j](g) − f_ij^k X_k(g) = {f_ij^k, g} H_k

holds exactly.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.algebra.bfv_finite import ConstraintSystem, graded_poisson, ideal_membership
from src.algebra.graded_core import (
    Derivation,
    GradedAlgebra,
    GradedPoly,
    apply_derivation,
    mul,
    random_poly,
)

logger = logging.getLogger(__name__)

KAPPA = Fraction(-1, 2)
KAPPA_VERBATIM = Fraction(1)


@dataclass(frozen=True)
class Section:
    components: Tuple[GradedPoly, ...]

    @classmethod
    def unit(cls, cs: ConstraintSystem, i: int) -> "Section":
        return cls(tuple(cs.algebra.const(1 if k == i else 0) for k in range(cs.m)))

    @classmethod
    def of(cls, cs: ConstraintSystem, polys: Sequence[GradedPoly]) -> "Section":
        if len(polys) != cs.m:
            raise ValueError(f"section needs {cs.m} components, got {len(polys)}")
        return cls(tuple(polys))

    def scale(self, g: GradedPoly) -> "Section":
        return Section(tuple(mul(g, s) for s in self.components))

    def __add__(self, other: "Section") -> "Section":
        return Section(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "Section") -> "Section":
        return Section(tuple(a - b for a, b in zip(self.components, other.components)))

    def is_zero(self) -> bool:
        return all(s.is_zero() for s in self.components)

    def __str__(self) -> str:
        return "(" + ", ".join(str(s) for s in self.components) + ")"


def hamiltonian_field(cs: ConstraintSystem, i: int, g: GradedPoly) -> GradedPoly:
    """X_i(g) = {H_i, g}."""
    return graded_poisson(cs.H[i], g)


def hamiltonian_commutator_defect(cs: ConstraintSystem, i: int, j: int, g: GradedPoly) -> GradedPoly:
    """[X_i,X_j](g) − f_ij^k X_k(g)."""
    out = hamiltonian_field(cs, i, hamiltonian_field(cs, j, g)) - hamiltonian_field(cs, j, hamiltonian_field(cs, i, g))
    for k in range(cs.m):
        out = out - mul(cs.structure(i, j, k), hamiltonian_field(cs, k, g))
    return out


def expected_commutator_defect(cs: ConstraintSystem, i: int, j: int, g: GradedPoly) -> GradedPoly:
    out = cs.algebra.zero()
    for k in range(cs.m):
        out = out + mul(graded_poisson(cs.structure(i, j, k), g), cs.H[k])
    return out


# ---------------------------------------------------------------------------
# Alternative 1: anchor s ↦ s^i X_i
# ---------------------------------------------------------------------------

def alt1_anchor(cs: ConstraintSystem, s: Section) -> Derivation:
    images = {}
    for name in cs.phase_generators():
        g = cs.var(name)
        img = cs.algebra.zero()
        for i, si in enumerate(s.components):
            img = img + mul(si, hamiltonian_field(cs, i, g))
        images[name] = img
    return Derivation(cs.algebra, 0, images, zero_default=True)


def alt1_bracket(cs: ConstraintSystem, s1: Section, s2: Section) -> Section:
    """⟦s1,s2⟧^k = f_ij^k s1^i s2^j + s1^i X_i(s2^k) − s2^i X_i(s1^k)."""
    out = []
    for k in range(cs.m):
        comp = cs.algebra.zero()
        for i in range(cs.m):
            for j in range(cs.m):
                comp = comp + mul(mul(cs.structure(i, j, k), s1.components[i]), s2.components[j])
            comp = comp + mul(s1.components[i], hamiltonian_field(cs, i, s2.components[k]))
            comp = comp - mul(s2.components[i], hamiltonian_field(cs, i, s1.components[k]))
        out.append(comp)
    return Section(tuple(out))


def alt1_leibniz_defect(cs: ConstraintSystem, s1: Section, s2: Section, g: GradedPoly) -> Section:
    lhs = alt1_bracket(cs, s1, s2.scale(g))
    rhs = alt1_bracket(cs, s1, s2).scale(g) + s2.scale(apply_derivation(alt1_anchor(cs, s1), g))
    return lhs - rhs


def alt1_anchor_defect(cs: ConstraintSystem, s1: Section, s2: Section, g: GradedPoly) -> GradedPoly:
    """(ρ(⟦s1,s2⟧) − [ρ(s1),ρ(s2)])(g)."""
    rho = lambda s: alt1_anchor(cs, s)
    lhs = apply_derivation(rho(alt1_bracket(cs, s1, s2)), g)
    r1, r2 = rho(s1), rho(s2)
    commutator = apply_derivation(r1, apply_derivation(r2, g)) - apply_derivation(r2, apply_derivation(r1, g))
    return lhs - commutator


def expected_anchor_defect(cs: ConstraintSystem, s1: Section, s2: Section, g: GradedPoly) -> GradedPoly:
    """−s1^i s2^j {f_ij^k, g} H_k."""
    out = cs.algebra.zero()
    for i, j, k in iproduct(range(cs.m), repeat=3):
        f = cs.structure(i, j, k)
        if f.is_zero():
            continue
        out = out - mul(mul(mul(s1.components[i], s2.components[j]), graded_poisson(f, g)), cs.H[k])
    return out


@dataclass
class Alt1Model:
    """Q on functions of (x, p, c): Qg = X_i(g) c^i, Qc^i = κ f^i_jk c^j c^k."""
    cs: ConstraintSystem
    kappa: Fraction = KAPPA

    @property
    def algebra(self) -> GradedAlgebra:
        return self.cs.algebra

    def q(self) -> Derivation:
        cs = self.cs
        images: Dict[str, GradedPoly] = {}
        for name in cs.phase_generators():
            g = cs.var(name)
            img = cs.algebra.zero()
            for i in range(cs.m):
                img = img + mul(hamiltonian_field(cs, i, g), cs.c(i))
            images[name] = img
        for i in range(cs.m):
            img = cs.algebra.zero()
            for j, k in iproduct(range(cs.m), repeat=2):
                img = img + mul(mul(cs.structure(j, k, i), cs.c(j)), cs.c(k))
            images[cs.phase.c[i]] = img * self.kappa
        return Derivation(cs.algebra, 1, images, zero_default=True)


def alt1_q_square(model: Alt1Model, target: Union[str, GradedPoly]) -> GradedPoly:
    if isinstance(target, str):
        target = model.algebra.var(target)
    Q = model.q()
    return apply_derivation(Q, apply_derivation(Q, target))


def expected_q_square_function(model: Alt1Model, g: GradedPoly) -> GradedPoly:
    """½ Σ_{j,i} {f_ji^k, g} H_k c^j c^i, valid at κ = −½."""
    cs = model.cs
    out = cs.algebra.zero()
    for j, i, k in iproduct(range(cs.m), repeat=3):
        f = cs.structure(j, i, k)
        if f.is_zero():
            continue
        out = out + mul(mul(mul(graded_poisson(f, g), cs.H[k]), cs.c(j)), cs.c(i)) * Fraction(1, 2)
    return out


def expected_q_square_ghost(model: Alt1Model, i: int) -> GradedPoly:
    """κ Σ X_l(f^i_jk) c^l c^j c^k + 2κ² Σ f^i_jk f^j_lm c^l c^m c^k."""
    cs, kappa = model.cs, model.kappa
    out = cs.algebra.zero()
    for l, j, k in iproduct(range(cs.m), repeat=3):
        f = cs.structure(j, k, i)
        if not f.is_zero():
            out = out + mul(mul(mul(hamiltonian_field(cs, l, f), cs.c(l)), cs.c(j)), cs.c(k)) * kappa
    for j, k, l, m_ in iproduct(range(cs.m), repeat=4):
        f1, f2 = cs.structure(j, k, i), cs.structure(l, m_, j)
        if f1.is_zero() or f2.is_zero():
            continue
        out = out + mul(mul(mul(mul(f1, f2), cs.c(l)), cs.c(m_)), cs.c(k)) * (2 * kappa * kappa)
    return out


def calibrate_kappa(cs: ConstraintSystem, target: GradedPoly) -> Optional[Fraction]:
    """
    Q²(target) is affine in κ; return the κ making it vanish, or None if no
    single κ does.
    """
    p0 = alt1_q_square(Alt1Model(cs, Fraction(0)), target)
    p1 = alt1_q_square(Alt1Model(cs, Fraction(1)), target)
    slope = p1 - p0
    if slope.is_zero():
        return Fraction(0) if p0.is_zero() else None
    m, c = next(iter(sorted(slope.terms.items())))
    kappa = -p0.terms.get(m, Fraction(0)) / c
    if not (p0 + slope * kappa).is_zero():
        return None
    return kappa


def vanishes_on_shell(cs: ConstraintSystem, poly: GradedPoly) -> bool:
    """True iff poly lies in the ideal ⟨H_i⟩ within the degree bound."""
    return ideal_membership(cs, poly) is not None


# ---------------------------------------------------------------------------
# Alternative 2: ρ₂(s) = {s^i H_i, ·}
# ---------------------------------------------------------------------------

def hamiltonian_of(cs: ConstraintSystem, s: Section) -> GradedPoly:
    out = cs.algebra.zero()
    for si, h in zip(s.components, cs.H):
        out = out + mul(si, h)
    return out


@dataclass
class Alt2Model:
    """Sections act through F_s = s^i H_i; the bracket is {F_s1, F_s2}."""
    cs: ConstraintSystem

    def bracket(self, s1: Section, s2: Section) -> GradedPoly:
        return graded_poisson(hamiltonian_of(self.cs, s1), hamiltonian_of(self.cs, s2))

    def anchor(self, s: Section, a: GradedPoly) -> GradedPoly:
        return graded_poisson(hamiltonian_of(self.cs, s), a)


@dataclass
class Alt2Report:
    leibniz_residue: GradedPoly
    homomorphism_residues: List[GradedPoly]
    witness: Optional[GradedPoly] = None
    witness_defect: Optional[GradedPoly] = None

    @property
    def identities_hold(self) -> bool:
        return self.leibniz_residue.is_zero() and all(r.is_zero() for r in self.homomorphism_residues)


def witness_candidates(cs: ConstraintSystem) -> List[GradedPoly]:
    """Bounded search space: phase-space generators, then their pairwise products."""
    gens = [cs.var(n) for n in cs.phase_generators()]
    pairs = [mul(a, b) for i, a in enumerate(gens) for b in gens[i:]]
    return gens + pairs


def nonlinearity_witness(cs: ConstraintSystem, s: Section, g: GradedPoly) -> Tuple[Optional[GradedPoly], Optional[GradedPoly]]:
    """First a with (ρ₂(g s) − g ρ₂(s))(a) ≠ 0, together with that defect."""
    model = Alt2Model(cs)
    for a in witness_candidates(cs):
        defect = model.anchor(s.scale(g), a) - mul(g, model.anchor(s, a))
        if not defect.is_zero():
            return a, defect
    return None, None


def alt2_checks(cs: ConstraintSystem, s1: Section, s2: Section, g: GradedPoly,
                arguments: Optional[Sequence[GradedPoly]] = None) -> Alt2Report:
    F1, F2 = hamiltonian_of(cs, s1), hamiltonian_of(cs, s2)
    # g·s2 acts through g F2
    leibniz = graded_poisson(F1, mul(g, F2)) - mul(g, graded_poisson(F1, F2)) - mul(graded_poisson(F1, g), F2)
    arguments = list(arguments) if arguments is not None else witness_candidates(cs)
    bracket = graded_poisson(F1, F2)
    homs = []
    for a in arguments:
        lhs = graded_poisson(bracket, a)
        rhs = graded_poisson(F1, graded_poisson(F2, a)) - graded_poisson(F2, graded_poisson(F1, a))
        homs.append(lhs - rhs)
    report = Alt2Report(leibniz, homs)
    for s in (s1, s2):
        report.witness, report.witness_defect = nonlinearity_witness(cs, s, g)
        if report.witness is not None:
            break
    return report


def random_section(cs: ConstraintSystem, rng: np.random.Generator, n_terms: int = 2) -> Section:
    phase = GradedAlgebraView(cs)
    return Section(tuple(phase.random(rng, n_terms) for _ in range(cs.m)))


def random_function(cs: ConstraintSystem, rng: np.random.Generator, n_terms: int = 2) -> GradedPoly:
    return GradedAlgebraView(cs).random(rng, n_terms)


class GradedAlgebraView:
    """Random polynomials restricted to the phase-space generators."""

    def __init__(self, cs: ConstraintSystem):
        self.cs = cs
        self.sub = GradedAlgebra([(n, 0) for n in cs.phase_generators()])

    def random(self, rng: np.random.Generator, n_terms: int) -> GradedPoly:
        p = random_poly(self.sub, rng, n_terms, max_factors=2)
        out = self.cs.algebra.zero()
        for m, c in p.terms.items():
            term = self.cs.algebra.const(c)
            for g in self.sub.word(m):
                term = mul(term, self.cs.var(self.sub.generators[g].name))
            out = out + term
        return out
