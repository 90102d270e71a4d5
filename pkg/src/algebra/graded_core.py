"""
Exact graded-commutative polynomial algebra over the rationals.

Monomials are tuples of ``(generator_id, exponent)`` pairs sorted by id; odd
generators carry exponent 1 at most, so (odd)^2 = 0 never needs a rule. The
Koszul sign of a product is absorbed into the coefficient when the factors are
merged into sorted order. Every derivation here is a *left* derivation.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import config
from src.utils.reliability import (
    ConfigurationError,
    DegreeMismatchError,
    GeneratorMismatchError,
    MissingImageError,
    StepCounter,
)

logger = logging.getLogger(__name__)

Monomial = Tuple[Tuple[int, int], ...]
Scalar = Union[int, Fraction]

ONE: Monomial = ()


@dataclass(frozen=True)
class Generator:
    id: int
    name: str
    degree: int

    @property
    def parity(self) -> int:
        return self.degree % 2


class GradedAlgebra:
    """A free graded-commutative algebra on named generators."""

    def __init__(self, generators: Iterable[Tuple[str, int]]):
        gens = []
        for i, (name, degree) in enumerate(generators):
            gens.append(Generator(i, name, int(degree)))
        names = [g.name for g in gens]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate generator names in {names}")
        self.generators: Tuple[Generator, ...] = tuple(gens)
        self._by_name: Dict[str, Generator] = {g.name: g for g in gens}

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedAlgebra) and self.generators == other.generators

    def __hash__(self) -> int:
        return hash(self.generators)

    def __repr__(self) -> str:
        return "GradedAlgebra(" + ", ".join(f"{g.name}:{g.degree}" for g in self.generators) + ")"

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def gen(self, name: str) -> Generator:
        try:
            return self._by_name[name]
        except KeyError:
            raise GeneratorMismatchError(f"no generator named {name!r}")

    def var(self, name: str) -> "GradedPoly":
        return GradedPoly(self, {((self.gen(name).id, 1),): Fraction(1)})

    def const(self, c: Scalar) -> "GradedPoly":
        c = Fraction(c)
        return GradedPoly(self, {ONE: c} if c else {})

    def zero(self) -> "GradedPoly":
        return GradedPoly(self, {})

    def one(self) -> "GradedPoly":
        return self.const(1)

    # -- monomial helpers ---------------------------------------------------

    def monomial_degree(self, m: Monomial) -> int:
        return sum(self.generators[g].degree * e for g, e in m)

    def monomial_parity(self, m: Monomial) -> int:
        return self.monomial_degree(m) % 2

    def mul_monomials(self, a: Monomial, b: Monomial) -> Tuple[int, Monomial]:
        """Return (sign, a*b); sign 0 when an odd generator repeats."""
        sign = 1
        odd_a = [g for g, _ in a if self.generators[g].parity]
        for g, _ in b:
            if not self.generators[g].parity:
                continue
            # every odd generator of `a` with a larger id has to pass over g
            passes = sum(1 for h in odd_a if h > g)
            if passes % 2:
                sign = -sign
            if g in odd_a:
                return 0, ONE
        merged: Dict[int, int] = dict(a)
        for g, e in b:
            merged[g] = merged.get(g, 0) + e
        return sign, tuple(sorted(merged.items()))

    def normalize_word(self, word: Sequence[int]) -> Tuple[int, Monomial]:
        """Sort a sequence of generator ids into a monomial with its Koszul sign."""
        sign, m = 1, ONE
        for g in word:
            s, m = self.mul_monomials(m, ((g, 1),))
            if s == 0:
                return 0, ONE
            sign *= s
        return sign, m

    def word(self, m: Monomial) -> List[int]:
        out: List[int] = []
        for g, e in m:
            out.extend([g] * e)
        return out

    def format_monomial(self, m: Monomial) -> str:
        parts = []
        for g, e in m:
            name = self.generators[g].name
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts)


class GradedPoly:
    """Immutable polynomial: normalized monomial -> nonzero Fraction."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: GradedAlgebra, terms: Mapping[Monomial, Fraction]):
        self.algebra = algebra
        self.terms: Dict[Monomial, Fraction] = {m: Fraction(c) for m, c in terms.items() if c}

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "GradedPoly"):
        if other.algebra is not self.algebra and other.algebra != self.algebra:
            raise GeneratorMismatchError()

    def _coerce(self, other) -> "GradedPoly":
        if isinstance(other, GradedPoly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.algebra.const(other)
        return NotImplemented

    def __add__(self, other) -> "GradedPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return GradedPoly(self.algebra, terms)

    __radd__ = __add__

    def __neg__(self) -> "GradedPoly":
        return GradedPoly(self.algebra, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "GradedPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "GradedPoly":
        return (-self) + other

    def __mul__(self, other) -> "GradedPoly":
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return GradedPoly(self.algebra, {m: v * c for m, v in self.terms.items()})
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return mul(self, other)

    def __rmul__(self, other) -> "GradedPoly":
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.algebra.const(other)
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return self.algebra == other.algebra and self.terms == other.terms

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- inspection ---------------------------------------------------------

    def __iter__(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(sorted(self.terms.items()))

    def degrees(self) -> List[int]:
        return sorted({self.algebra.monomial_degree(m) for m in self.terms})

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    @property
    def degree(self) -> Optional[int]:
        """Total degree of a homogeneous polynomial (None for zero)."""
        degs = self.degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"{self} is not homogeneous (degrees {degs})")
        return degs[0]

    def homogeneous_part(self, degree: int) -> "GradedPoly":
        return GradedPoly(self.algebra, {m: c for m, c in self.terms.items()
                                         if self.algebra.monomial_degree(m) == degree})

    def filter(self, predicate) -> "GradedPoly":
        return GradedPoly(self.algebra, {m: c for m, c in self.terms.items() if predicate(m)})

    def count_in(self, m: Monomial, ids: Iterable[int]) -> int:
        ids = set(ids)
        return sum(e for g, e in m if g in ids)

    def generator_ids(self) -> List[int]:
        return sorted({g for m in self.terms for g, _ in m})

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for m, c in sorted(self.terms.items()):
            mono = self.algebra.format_monomial(m)
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not mono:
                body = str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{a}*{mono}"
            out.append((sign, body))
        first_sign, first = out[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in out[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"GradedPoly({self})"


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------

def mul(p: GradedPoly, q: GradedPoly) -> GradedPoly:
    """Graded-commutative product with Koszul signs."""
    p._check(q)
    alg = p.algebra
    out: Dict[Monomial, Fraction] = {}
    for ma, ca in p.terms.items():
        for mb, cb in q.terms.items():
            sign, m = alg.mul_monomials(ma, mb)
            if sign == 0:
                continue
            out[m] = out.get(m, Fraction(0)) + sign * ca * cb
    return GradedPoly(alg, out)


def product(polys: Sequence[GradedPoly], algebra: GradedAlgebra) -> GradedPoly:
    out = algebra.one()
    for p in polys:
        out = mul(out, p)
    return out


def monomial_poly(algebra: GradedAlgebra, m: Monomial, c: Scalar = 1) -> GradedPoly:
    return GradedPoly(algebra, {m: Fraction(c)})


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    """
    A graded derivation given by its images on generators.

    With ``zero_default`` generators without an image are mapped to 0;
    otherwise applying the derivation to them raises MissingImageError.
    """
    algebra: GradedAlgebra
    degree: int
    images: Mapping[str, GradedPoly] = field(default_factory=dict)
    zero_default: bool = False

    def __post_init__(self):
        for name, img in self.images.items():
            gen = self.algebra.gen(name)
            if img.is_zero():
                continue
            if img.algebra != self.algebra:
                raise GeneratorMismatchError(f"image of {name} lives in another algebra")
            expected = gen.degree + self.degree
            if img.degrees() != [expected]:
                raise DegreeMismatchError(name, expected, img.degrees()[0] if img.is_homogeneous() else None)

    @property
    def parity(self) -> int:
        return self.degree % 2

    def image(self, gen: Generator) -> GradedPoly:
        img = self.images.get(gen.name)
        if img is None:
            if self.zero_default:
                return self.algebra.zero()
            raise MissingImageError(gen.name)
        return img

    def __call__(self, p: GradedPoly) -> GradedPoly:
        return apply_derivation(self, p)


def apply_derivation(D: Derivation, p: GradedPoly) -> GradedPoly:
    """Extend D by D(ab) = D(a)b + (-1)^{|D||a|} a D(b)."""
    alg = D.algebra
    p._check(alg.zero())
    out = alg.zero()
    for m, c in p.terms.items():
        word = alg.word(m)
        prefix_degree = 0
        for pos, g in enumerate(word):
            img = D.image(alg.generators[g])
            if not img.is_zero():
                sign = -1 if (D.parity and prefix_degree % 2) else 1
                left = _word_poly(alg, word[:pos])
                right = _word_poly(alg, word[pos + 1:])
                out = out + mul(mul(left, img), right) * (sign * c)
            prefix_degree += alg.generators[g].degree
    return out


def _word_poly(alg: GradedAlgebra, word: Sequence[int]) -> GradedPoly:
    sign, m = alg.normalize_word(word)
    return GradedPoly(alg, {m: Fraction(sign)} if sign else {})


def derivation_commutator(D1: Derivation, D2: Derivation) -> Derivation:
    """[D1,D2] = D1∘D2 − (−1)^{|D1||D2|} D2∘D1, returned by its images."""
    if D1.algebra != D2.algebra:
        raise GeneratorMismatchError()
    sign = -1 if (D1.parity and D2.parity) else 1
    images = {}
    for gen in D1.algebra.generators:
        g = D1.algebra.var(gen.name)
        images[gen.name] = D1(D2(g)) - D2(D1(g)) * sign
    return Derivation(D1.algebra, D1.degree + D2.degree, images)


def partial_derivation(algebra: GradedAlgebra, name: str) -> Derivation:
    """The left partial derivative ∂/∂name (degree −|name|)."""
    gen = algebra.gen(name)
    return Derivation(algebra, -gen.degree, {name: algebra.one()}, zero_default=True)


def partial_left(p: GradedPoly, name: str) -> GradedPoly:
    return apply_derivation(partial_derivation(p.algebra, name), p)


def partial_right(p: GradedPoly, name: str) -> GradedPoly:
    """Right derivative p∂⃖/∂g = (−1)^{|g|(|m|−|g|)} ∂⃗m/∂g per monomial m."""
    alg = p.algebra
    gen = alg.gen(name)
    out = alg.zero()
    for m, c in p.terms.items():
        left = partial_left(GradedPoly(alg, {m: c}), name)
        rest_degree = alg.monomial_degree(m) - gen.degree
        if gen.parity and rest_degree % 2:
            left = -left
        out = out + left
    return out


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------

def divides(a: Monomial, b: Monomial) -> bool:
    eb = dict(b)
    return all(eb.get(g, 0) >= e for g, e in a)


def quotient(b: Monomial, a: Monomial) -> Monomial:
    eb = dict(b)
    for g, e in a:
        eb[g] -= e
    return tuple(sorted((g, e) for g, e in eb.items() if e))


def term_order_key(m: Monomial) -> Tuple[int, Tuple[Tuple[int, int], ...]]:
    """Word length first, then generator ids; substitutions should decrease it."""
    return (sum(e for _, e in m), m)


@dataclass(frozen=True)
class RelationSet:
    """
    Monomial annihilators plus substitution rules ``lhs monomial -> polynomial``.

    Reduction is innermost-leftmost: the smallest monomial is rewritten by the
    first applicable rule, annihilators before substitutions.
    """
    algebra: GradedAlgebra
    annihilators: Tuple[Monomial, ...] = ()
    substitutions: Tuple[Tuple[Monomial, GradedPoly], ...] = ()
    budget: int = field(default_factory=lambda: config.STEP_BUDGET)

    def __post_init__(self):
        for lhs, rhs in self.substitutions:
            for m in rhs.terms:
                if term_order_key(m) >= term_order_key(lhs):
                    logger.warning(
                        f"Substitution {self.algebra.format_monomial(lhs)} -> {rhs} does not decrease the term order"
                    )

    @classmethod
    def empty(cls, algebra: GradedAlgebra) -> "RelationSet":
        return cls(algebra)

    @classmethod
    def from_polys(cls, algebra: GradedAlgebra, annihilators: Sequence[GradedPoly] = (),
                   substitutions: Sequence[Tuple[GradedPoly, GradedPoly]] = (),
                   budget: Optional[int] = None) -> "RelationSet":
        def single(p: GradedPoly) -> Monomial:
            if len(p.terms) != 1:
                raise ConfigurationError(f"relation left side {p} is not a single monomial")
            (m, c), = p.terms.items()
            if c != 1:
                raise ConfigurationError(f"relation left side {p} must have coefficient 1")
            return m
        ann = tuple(single(p) for p in annihilators)
        subs = tuple((single(lhs), rhs) for lhs, rhs in substitutions)
        return cls(algebra, ann, subs, budget if budget is not None else config.STEP_BUDGET)


def reduce_mod_relations(p: GradedPoly, R: RelationSet) -> GradedPoly:
    """Unique normal form of p modulo R (step-budget guarded)."""
    alg = R.algebra
    p._check(alg.zero())
    counter = StepCounter(R.budget, "reduce_mod_relations")
    done: Dict[Monomial, Fraction] = {}
    pending: Dict[Monomial, Fraction] = dict(p.terms)
    while pending:
        counter.tick()
        m = min(pending, key=term_order_key)
        c = pending.pop(m)
        if not c:
            continue
        if any(divides(a, m) for a in R.annihilators):
            continue
        for lhs, rhs in R.substitutions:
            if divides(lhs, m):
                rest = quotient(m, lhs)
                sign, check = alg.mul_monomials(lhs, rest)
                assert check == m
                for rm, rc in mul(rhs, monomial_poly(alg, rest)).terms.items():
                    pending[rm] = pending.get(rm, Fraction(0)) + sign * c * rc
                break
        else:
            done[m] = done.get(m, Fraction(0)) + c
    return GradedPoly(alg, done)


# ---------------------------------------------------------------------------
# Nilpotency and homomorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NilpotencyResult:
    ok: bool
    generator: Optional[str] = None
    residue: Optional[GradedPoly] = None

    def __bool__(self) -> bool:
        return self.ok


def check_nilpotent(D: Derivation, R: Optional[RelationSet] = None) -> NilpotencyResult:
    """OK iff D(D(g)) reduces to 0 for every generator g."""
    if not D.parity:
        raise ConfigurationError("check_nilpotent needs an odd derivation")
    R = R or RelationSet.empty(D.algebra)
    for gen in D.algebra.generators:
        g = D.algebra.var(gen.name)
        residue = reduce_mod_relations(D(D(g)), R)
        if not residue.is_zero():
            return NilpotencyResult(False, gen.name, residue)
    return NilpotencyResult(True)


def substitute_hom(images: Mapping[str, GradedPoly], p: GradedPoly,
                   target: Optional[GradedAlgebra] = None) -> GradedPoly:
    """
    Algebra homomorphism defined on generators. Generators without an image
    map to the same-named generator of the target algebra.
    """
    src = p.algebra
    target = target or src
    cache: Dict[int, GradedPoly] = {}
    for gen in src.generators:
        if gen.name in images:
            img = images[gen.name]
            if not img.is_zero() and img.degrees() != [gen.degree]:
                raise DegreeMismatchError(gen.name, gen.degree, img.degrees()[0] if img.is_homogeneous() else None)
            cache[gen.id] = img
        elif gen.name in target:
            cache[gen.id] = target.var(gen.name)
    out = target.zero()
    for m, c in p.terms.items():
        term = target.const(c)
        for g in src.word(m):
            if g not in cache:
                raise MissingImageError(src.generators[g].name)
            term = mul(term, cache[g])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# Randomized inputs for property suites
# ---------------------------------------------------------------------------

def random_monomial(algebra: GradedAlgebra, rng: np.random.Generator, max_factors: int = 3) -> GradedPoly:
    n = int(rng.integers(0, max_factors + 1))
    word = [int(rng.integers(0, len(algebra.generators))) for _ in range(n)]
    sign, m = algebra.normalize_word(word)
    coef = Fraction(int(rng.integers(1, 6)), int(rng.integers(1, 4)))
    if sign == 0:
        return algebra.const(coef)
    return monomial_poly(algebra, m, coef * sign)


def random_poly(algebra: GradedAlgebra, rng: np.random.Generator, n_terms: int = 3,
                max_factors: int = 3, degree: Optional[int] = None) -> GradedPoly:
    """Random polynomial; with ``degree`` only monomials of that degree are kept."""
    out = algebra.zero()
    attempts = 0
    while len(out.terms) < n_terms and attempts < 50 * n_terms:
        attempts += 1
        m = random_monomial(algebra, rng, max_factors)
        if degree is not None and m.degrees() != [degree]:
            continue
        if int(rng.integers(0, 2)):
            m = -m
        out = out + m
    return out


def random_derivation(algebra: GradedAlgebra, rng: np.random.Generator, degree: int) -> Derivation:
    images = {g.name: random_poly(algebra, rng, 2, 3, degree=g.degree + degree) for g in algebra.generators}
    return Derivation(algebra, degree, images)
