"""
Finite-dimensional polynomial BFV models.

Generators are x1..xn, p1..pn (degree 0), ghosts c1..cm (+1) and ghost
momenta b1..bm (−1). The bracket is

    {F,G} = Σ (∂F/∂x ∂G/∂p − ∂F/∂p ∂G/∂x) + Σ [(F∂⃖/∂c)(∂⃗G/∂b) + (F∂⃖/∂b)(∂⃗G/∂c)]

so {x_i, p_j} = δ_ij and {c^i, b_j} = δ^i_j. With this pairing the master
equation forces S¹ = −½ f_ij^k b_k c^i c^j.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import sympy

from src.algebra.graded_core import (
    Derivation,
    GradedAlgebra,
    GradedPoly,
    Monomial,
    apply_derivation,
    check_nilpotent,
    divides,
    monomial_poly,
    mul,
    partial_left,
    partial_right,
    quotient,
)
from src.algebra.polyparse import parse_poly
from src.config import config
from src.utils.reliability import (
    ConfigurationError,
    FirstClassError,
    NonRegularConstraintError,
    OrderBudgetExhausted,
)

logger = logging.getLogger(__name__)

S1_COEFFICIENT = Fraction(-1, 2)


@dataclass(frozen=True)
class PhaseSpace:
    n: int
    m: int = 0

    @property
    def x(self) -> List[str]:
        return [f"x{i + 1}" for i in range(self.n)]

    @property
    def p(self) -> List[str]:
        return [f"p{i + 1}" for i in range(self.n)]

    @property
    def c(self) -> List[str]:
        return [f"c{i + 1}" for i in range(self.m)]

    @property
    def b(self) -> List[str]:
        return [f"b{i + 1}" for i in range(self.m)]

    def algebra(self) -> GradedAlgebra:
        gens = [(name, 0) for name in self.x + self.p]
        gens += [(name, 1) for name in self.c]
        gens += [(name, -1) for name in self.b]
        return GradedAlgebra(gens)


def phase_space_of(algebra: GradedAlgebra) -> PhaseSpace:
    n = sum(1 for g in algebra.generators if g.name.startswith("x"))
    m = sum(1 for g in algebra.generators if g.name.startswith("c"))
    return PhaseSpace(n, m)


def graded_poisson(F: GradedPoly, G: GradedPoly) -> GradedPoly:
    """Canonical graded Poisson bracket of degree 0."""
    F._check(G)
    ps = phase_space_of(F.algebra)
    out = F.algebra.zero()
    for x, p in zip(ps.x, ps.p):
        out = out + mul(partial_right(F, x), partial_left(G, p)) - mul(partial_right(F, p), partial_left(G, x))
    for c, b in zip(ps.c, ps.b):
        out = out + mul(partial_right(F, c), partial_left(G, b)) + mul(partial_right(F, b), partial_left(G, c))
    return out


def xp_bracket(F: GradedPoly, G: GradedPoly) -> GradedPoly:
    """{F,G}₀: the bracket on (x, p) only."""
    ps = phase_space_of(F.algebra)
    out = F.algebra.zero()
    for x, p in zip(ps.x, ps.p):
        out = out + mul(partial_right(F, x), partial_left(G, p)) - mul(partial_right(F, p), partial_left(G, x))
    return out


# ---------------------------------------------------------------------------
# Constraint systems
# ---------------------------------------------------------------------------

@dataclass
class ConstraintSystem:
    """Constraints H_i and structure functions f_ij^k (0-based keys)."""
    phase: PhaseSpace
    algebra: GradedAlgebra
    H: List[GradedPoly]
    f: Dict[Tuple[int, int, int], GradedPoly] = field(default_factory=dict)
    name: str = ""

    @property
    def m(self) -> int:
        return len(self.H)

    def structure(self, i: int, j: int, k: int) -> GradedPoly:
        return self.f.get((i, j, k), self.algebra.zero())

    def var(self, name: str) -> GradedPoly:
        return self.algebra.var(name)

    def x(self, i: int) -> GradedPoly:
        return self.var(self.phase.x[i])

    def p(self, i: int) -> GradedPoly:
        return self.var(self.phase.p[i])

    def c(self, i: int) -> GradedPoly:
        return self.var(self.phase.c[i])

    def b(self, i: int) -> GradedPoly:
        return self.var(self.phase.b[i])

    def phase_generators(self) -> List[str]:
        return self.phase.x + self.phase.p

    def is_constant_structure(self) -> bool:
        return all(not f.generator_ids() for f in self.f.values())

    def scaled(self, factor: Fraction) -> "ConstraintSystem":
        """H -> λH, f -> λf (the first-class identity is preserved)."""
        return ConstraintSystem(self.phase, self.algebra, [h * factor for h in self.H],
                                {key: v * factor for key, v in self.f.items()}, f"{self.name}*{factor}")

    @classmethod
    def from_strings(cls, n: int, H: Sequence[str], f: Mapping[str, str] = None, name: str = "") -> "ConstraintSystem":
        """
        Build from model-file strings; ``f`` keys are ``"i,j,k"`` (1-based) for
        f_ij^k, the (j,i) entry is filled by antisymmetry.
        """
        phase = PhaseSpace(n, len(H))
        alg = phase.algebra()
        polys = [parse_poly(alg, h) for h in H]
        for h, text in zip(polys, H):
            if h.generator_ids() and any(alg.generators[g].name[0] in "cb" for g in h.generator_ids()):
                raise ConfigurationError(f"constraint {text!r} must be a phase-space function")
        table: Dict[Tuple[int, int, int], GradedPoly] = {}
        for key, text in (f or {}).items():
            try:
                i, j, k = (int(v) - 1 for v in key.split(","))
            except ValueError:
                raise ConfigurationError(f"structure-function key {key!r} must look like 'i,j,k'")
            if not all(0 <= v < len(H) for v in (i, j, k)):
                raise ConfigurationError(f"structure-function key {key!r} out of range")
            value = parse_poly(alg, text)
            for (a, b_), v in (((i, j), value), ((j, i), -value)):
                prev = table.get((a, b_, k))
                if prev is not None and prev != v:
                    raise ConfigurationError(f"f_{a + 1}{b_ + 1}^{k + 1} is not antisymmetric")
                table[(a, b_, k)] = v
        table = {key: v for key, v in table.items() if not v.is_zero()}
        return cls(phase, alg, polys, table, name)


@dataclass
class FirstClassReport:
    passed: bool
    residues: Dict[Tuple[int, int], GradedPoly] = field(default_factory=dict)
    antisymmetry_violations: List[Tuple[int, int, int]] = field(default_factory=list)

    def describe(self) -> List[str]:
        lines = [f"{{H{i + 1},H{j + 1}}} - f H = {r}" for (i, j), r in sorted(self.residues.items())]
        lines += [f"f_{i + 1}{j + 1}^{k + 1} != -f_{j + 1}{i + 1}^{k + 1}" for i, j, k in self.antisymmetry_violations]
        return lines


def verify_first_class(cs: ConstraintSystem) -> FirstClassReport:
    report = FirstClassReport(True)
    for i in range(cs.m):
        for j in range(cs.m):
            for k in range(cs.m):
                if cs.structure(i, j, k) != -cs.structure(j, i, k):
                    report.antisymmetry_violations.append((i, j, k))
    for i in range(cs.m):
        for j in range(i + 1, cs.m):
            residue = graded_poisson(cs.H[i], cs.H[j])
            for k in range(cs.m):
                residue = residue - mul(cs.structure(i, j, k), cs.H[k])
            if not residue.is_zero():
                report.residues[(i, j)] = residue
    report.passed = not report.residues and not report.antisymmetry_violations
    return report


# ---------------------------------------------------------------------------
# Charges
# ---------------------------------------------------------------------------

@dataclass
class BFVModel:
    cs: ConstraintSystem
    S: GradedPoly

    @property
    def algebra(self) -> GradedAlgebra:
        return self.cs.algebra

    def b_ids(self) -> List[int]:
        return [self.algebra.gen(b).id for b in self.cs.phase.b]

    def b_degree(self, m: Monomial) -> int:
        ids = set(self.b_ids())
        return sum(e for g, e in m if g in ids)

    def component(self, k: int) -> GradedPoly:
        """S^(k): the part of S of degree k in b."""
        return self.S.filter(lambda m: self.b_degree(m) == k)

    def b_degrees(self) -> List[int]:
        return sorted({self.b_degree(m) for m in self.S.terms})

    def hamiltonian_derivation(self) -> Derivation:
        """Q = {S, ·}."""
        images = {g.name: graded_poisson(self.S, self.algebra.var(g.name)) for g in self.algebra.generators}
        return Derivation(self.algebra, 1, images)


def build_initial_charge(cs: ConstraintSystem, with_s1: bool = True) -> BFVModel:
    """S⁰ = Σ c^i H_i plus S¹ = −½ Σ f_ij^k b_k c^i c^j."""
    report = verify_first_class(cs)
    if not report.passed:
        raise FirstClassError({f"H{i + 1},H{j + 1}": str(r) for (i, j), r in report.residues.items()}
                              or {"f": "not antisymmetric"})
    S = cs.algebra.zero()
    for i in range(cs.m):
        S = S + mul(cs.c(i), cs.H[i])
    if with_s1:
        for (i, j, k), f in sorted(cs.f.items()):
            S = S + mul(mul(mul(cs.b(k), cs.c(i)), cs.c(j)), f) * S1_COEFFICIENT
    return BFVModel(cs, S)


def koszul_differential(cs: ConstraintSystem) -> Derivation:
    """δ: b_k ↦ H_k, everything else ↦ 0."""
    return Derivation(cs.algebra, 1, {b: h for b, h in zip(cs.phase.b, cs.H)}, zero_default=True)


def _xp_split(cs: ConstraintSystem, m: Monomial) -> Tuple[Monomial, Monomial]:
    xp = {cs.algebra.gen(n).id for n in cs.phase_generators()}
    return tuple(t for t in m if t[0] in xp), tuple(t for t in m if t[0] not in xp)


def _solve_linear(columns: List[Monomial], images: List[GradedPoly], target: GradedPoly):
    """Solve Σ u_a images[a] = target exactly; returns coefficients or None."""
    rows: Dict[Monomial, int] = {}
    for img in images:
        for m in img.terms:
            rows.setdefault(m, len(rows))
    for m in target.terms:
        if m not in rows:
            return None
    A = sympy.zeros(len(rows), len(columns))
    rhs = sympy.zeros(len(rows), 1)
    for a, img in enumerate(images):
        for m, c in img.terms.items():
            A[rows[m], a] = sympy.Rational(c.numerator, c.denominator)
    for m, c in target.terms.items():
        rhs[rows[m], 0] = sympy.Rational(c.numerator, c.denominator)
    try:
        sol, params = A.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    if params.shape[0]:
        sol = sol.subs({t: 0 for t in params})
    return [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in sol]


def koszul_homotopy(cs: ConstraintSystem, target: GradedPoly, degree_bound: int) -> Optional[GradedPoly]:
    """
    Find X with δX = target by bounded linear algebra over monomials.

    Candidate monomials are u·b_k·rest where u·v divides back to a target
    monomial for some monomial v of H_k; the candidate set is closed under the
    monomials δ produces, up to xp-degree ``degree_bound``.
    """
    if target.is_zero():
        return cs.algebra.zero()
    alg = cs.algebra
    delta = koszul_differential(cs)
    b_ids = [alg.gen(b).id for b in cs.phase.b]
    candidates: Set[Monomial] = set()
    frontier = set(target.terms)
    seen: Set[Monomial] = set()
    while frontier:
        new: Set[Monomial] = set()
        for t in frontier:
            if t in seen:
                continue
            seen.add(t)
            t_xp, _ = _xp_split(cs, t)
            for k, h in enumerate(cs.H):
                if dict(t).get(b_ids[k]):
                    continue
                for v in h.terms:
                    if not divides(v, t_xp):
                        continue
                    u = quotient(t, v)
                    sign, cand = alg.mul_monomials(((b_ids[k], 1),), u)
                    if sign == 0 or sum(e for _, e in _xp_split(cs, cand)[0]) > degree_bound:
                        continue
                    if cand not in candidates:
                        candidates.add(cand)
                        new.update(apply_derivation(delta, monomial_poly(alg, cand)).terms)
        frontier = new - seen
    columns = sorted(candidates)
    images = [apply_derivation(delta, monomial_poly(alg, m)) for m in columns]
    coeffs = _solve_linear(columns, images, target)
    if coeffs is None:
        return None
    out = alg.zero()
    for m, c in zip(columns, coeffs):
        if c:
            out = out + monomial_poly(alg, m, c)
    return out


@dataclass
class MasterEquationResult:
    S: GradedPoly
    order: int
    corrections: Dict[int, GradedPoly] = field(default_factory=dict)
    iterations: int = 0


def solve_master_equation(model: BFVModel, max_order: Optional[int] = None,
                          degree_bound: Optional[int] = None) -> MasterEquationResult:
    """
    Add corrections S^(k+1) solving 2δS^(k+1) = −R_k, where R_k is the
    lowest b-degree part of {S,S}, until {S,S} = 0 exactly.
    """
    cs = model.cs
    max_order = config.MAX_ORDER if max_order is None else max_order
    if degree_bound is None:
        max_deg = max((max(h.degrees()) for h in cs.H if not h.is_zero()), default=0)
        degree_bound = max_deg + config.DEGREE_BOUND_EXTRA
    work = BFVModel(cs, model.S)
    corrections: Dict[int, GradedPoly] = {}
    for iteration in range(max_order + 2):
        residual = graded_poisson(work.S, work.S)
        if residual.is_zero():
            order = max(work.b_degrees(), default=0)
            logger.debug(f"Master equation solved at order {order} after {iteration} corrections")
            return MasterEquationResult(work.S, order, corrections, iteration)
        lowest = min(work.b_degree(m) for m in residual.terms)
        if lowest + 1 > max_order:
            raise OrderBudgetExhausted(max_order, str(residual))
        part = residual.filter(lambda m: work.b_degree(m) == lowest)
        X = koszul_homotopy(cs, part * Fraction(-1, 2), degree_bound)
        if X is None:
            raise NonRegularConstraintError(lowest, f"cannot write {part} through the Koszul differential")
        logger.debug(f"Order {lowest + 1} correction: {X}")
        corrections[lowest + 1] = corrections.get(lowest + 1, cs.algebra.zero()) + X
        work = BFVModel(cs, work.S + X)
    raise OrderBudgetExhausted(max_order, str(graded_poisson(work.S, work.S)))


@dataclass
class CoisotropyReport:
    passed: bool
    lhs: GradedPoly
    contraction: GradedPoly
    residue: GradedPoly


def check_coisotropy_identity(model: BFVModel) -> CoisotropyReport:
    """{S⁰,S⁰}₀ + 2 Σ_k (S⁰∂⃖/∂c^k)(∂⃗S¹/∂b_k) = 0."""
    cs = model.cs
    S0, S1 = model.component(0), model.component(1)
    lhs = xp_bracket(S0, S0)
    contraction = cs.algebra.zero()
    for c, b in zip(cs.phase.c, cs.phase.b):
        contraction = contraction + mul(partial_right(S0, c), partial_left(S1, b)) * 2
    residue = lhs + contraction
    return CoisotropyReport(residue.is_zero(), lhs, contraction, residue)


def check_q_nilpotent(model: BFVModel):
    return check_nilpotent(model.hamiltonian_derivation())


def ideal_membership(cs: ConstraintSystem, poly: GradedPoly, degree_bound: Optional[int] = None) -> Optional[List[GradedPoly]]:
    """
    Coefficients a_k with poly = Σ a_k H_k, searched over monomials up to the
    degree bound, or None if no such expression exists within it.

    Columns u·H_k are seeded from the monomials of poly and closed under the
    monomials their images produce, so cancelling terms are found too.
    """
    if poly.is_zero():
        return [cs.algebra.zero() for _ in cs.H]
    alg = cs.algebra
    xp_degree = lambda m: sum(e for _, e in _xp_split(cs, m)[0])
    if degree_bound is None:
        degree_bound = max(xp_degree(m) for m in poly.terms) + config.DEGREE_BOUND_EXTRA
    columns: List[Tuple[int, Monomial]] = []
    images: List[GradedPoly] = []
    indexed: Set[Tuple[int, Monomial]] = set()
    frontier, seen = set(poly.terms), set()
    while frontier:
        new: Set[Monomial] = set()
        for t in frontier:
            seen.add(t)
            t_xp, _ = _xp_split(cs, t)
            for k, h in enumerate(cs.H):
                for v in h.terms:
                    if not divides(v, t_xp):
                        continue
                    u = quotient(t, v)
                    if (k, u) in indexed or xp_degree(u) > degree_bound:
                        continue
                    columns.append((k, u))
                    indexed.add((k, u))
                    img = mul(monomial_poly(alg, u), h)
                    images.append(img)
                    new.update(img.terms)
        frontier = new - seen
    coeffs = _solve_linear([u for _, u in columns], images, poly)
    if coeffs is None:
        return None
    out = [alg.zero() for _ in cs.H]
    for (k, u), c in zip(columns, coeffs):
        if c:
            out[k] = out[k] + monomial_poly(alg, u, c)
    return out


def so3_system() -> ConstraintSystem:
    """H_i = ε_ijk x_j p_k with f_ij^k = ε_ijk."""
    H = ["x2*p3 - x3*p2", "x3*p1 - x1*p3", "x1*p2 - x2*p1"]
    f = {"1,2,3": "1", "2,3,1": "1", "3,1,2": "1"}
    return ConstraintSystem.from_strings(3, H, f, "so3")


def nonconstant_system() -> ConstraintSystem:
    return ConstraintSystem.from_strings(2, ["p1", "-x1*x2*p1 + p2"], {"1,2,1": "x2"}, "nonconstant-f")


def abelian_system() -> ConstraintSystem:
    return ConstraintSystem.from_strings(2, ["p1", "p2"], {}, "abelian")
