from fractions import Fraction

import numpy as np
import pytest

from src.algebra.graded_core import (
    Derivation,
    GradedAlgebra,
    RelationSet,
    apply_derivation,
    check_nilpotent,
    derivation_commutator,
    mul,
    partial_derivation,
    random_derivation,
    random_monomial,
    random_poly,
    reduce_mod_relations,
    substitute_hom,
)
from src.config import config
from src.utils.reliability import (
    ConfigurationError,
    DegreeMismatchError,
    GeneratorMismatchError,
    MissingImageError,
    StepBudgetExceeded,
)


@pytest.fixture
def alg():
    return GradedAlgebra([("x", 0), ("y", 0), ("c1", 1), ("c2", 1), ("b", -1), ("e", 2)])


@pytest.fixture
def psi_alg():
    return GradedAlgebra([("xiN", 1), ("chiN", -1), ("psiN", 0), ("psiP", 0), ("h", 0)])


def test_odd_generators_anticommute(alg):
    c1, c2 = alg.var("c1"), alg.var("c2")
    assert mul(c2, c1) == -mul(c1, c2)
    assert mul(c1, c1).is_zero()
    assert str(mul(c2, c1)) == "-c1*c2"


def test_product_with_repeated_odd_factor(alg):
    x, c1, c2 = alg.var("x"), alg.var("c1"), alg.var("c2")
    p = x * 2 + mul(c1, c2)
    assert mul(p, c1) == mul(x, c1) * 2


def test_mixed_algebras_rejected(alg, psi_alg):
    with pytest.raises(GeneratorMismatchError):
        alg.var("x") + psi_alg.var("h")


def test_koszul_commutativity_on_random_monomials(alg):
    rng = np.random.default_rng(config.SEED)
    for _ in range(config.RANDOM_TRIALS):
        a, b = random_monomial(alg, rng), random_monomial(alg, rng)
        sign = -1 if (a.degree % 2 and b.degree % 2) else 1
        assert mul(a, b) == mul(b, a) * sign


def test_leibniz_rule_on_random_inputs(alg):
    rng = np.random.default_rng(config.SEED + 1)
    for trial in range(200):
        degree = [1, -1, 0, 2][trial % 4]
        D = random_derivation(alg, rng, degree)
        p, q = random_monomial(alg, rng), random_poly(alg, rng, 2)
        lhs = apply_derivation(D, mul(p, q))
        sign = -1 if (D.parity and p.degree % 2) else 1
        rhs = mul(apply_derivation(D, p), q) + mul(p, apply_derivation(D, q)) * sign
        assert lhs == rhs


def test_partial_derivative_of_odd_generator(alg):
    x, c1 = alg.var("x"), alg.var("c1")
    assert apply_derivation(partial_derivation(alg, "c1"), mul(c1, x)) == x
    # passing c2 to the left costs a sign
    c2 = alg.var("c2")
    assert apply_derivation(partial_derivation(alg, "c1"), mul(c2, c1)) == -c2


def test_koszul_differential_examples(alg):
    x, b = alg.var("x"), alg.var("b")
    D = Derivation(alg, 1, {"b": x}, zero_default=True)
    assert apply_derivation(D, mul(b, b)).is_zero()
    assert apply_derivation(D, mul(b, x)) == mul(x, x)
    assert check_nilpotent(D).ok


def test_missing_image_raises(alg):
    D = Derivation(alg, 1, {"b": alg.var("x")})
    with pytest.raises(MissingImageError):
        apply_derivation(D, alg.var("y"))


def test_derivation_degree_is_checked(alg):
    with pytest.raises(DegreeMismatchError):
        Derivation(alg, 1, {"c1": alg.var("x")})


def test_commutator_of_even_derivations(alg):
    x = alg.var("x")
    d1 = partial_derivation(alg, "x")
    d2 = Derivation(alg, 0, {"x": x}, zero_default=True)
    comm = derivation_commutator(d1, d2)
    assert comm.images["x"] == alg.one()
    assert all(comm.images[g.name].is_zero() for g in alg.generators if g.name != "x")


def test_commutator_of_odd_derivation_is_twice_its_square(alg):
    rng = np.random.default_rng(7)
    D = random_derivation(alg, rng, 1)
    comm = derivation_commutator(D, D)
    for g in alg.generators:
        v = alg.var(g.name)
        assert comm.images[g.name] == D(D(v)) * 2


def test_commutator_with_disjoint_support_vanishes(alg):
    d1 = Derivation(alg, 0, {"x": alg.var("y")}, zero_default=True)
    d2 = Derivation(alg, 0, {"e": mul(alg.var("c1"), alg.var("c2"))}, zero_default=True)
    comm = derivation_commutator(d1, d2)
    assert all(img.is_zero() for img in comm.images.values())


def test_check_nilpotent_reports_first_failure():
    alg = GradedAlgebra([("c", 1), ("e", 2), ("f", 3)])
    D = Derivation(alg, 1, {"c": alg.var("e"), "e": alg.var("f")}, zero_default=True)
    result = check_nilpotent(D)
    assert not result.ok
    assert result.generator == "c"
    assert result.residue == alg.var("f")


def test_check_nilpotent_needs_odd_derivation(alg):
    with pytest.raises(ConfigurationError):
        check_nilpotent(partial_derivation(alg, "x"))


def test_reduce_mod_ideal(psi_alg):
    xiN, psiN, psiP, h = (psi_alg.var(n) for n in ("xiN", "psiN", "psiP", "h"))
    R = RelationSet.from_polys(psi_alg, annihilators=[mul(psiN, xiN), mul(psiP, xiN), mul(psiN, psiP)])
    assert reduce_mod_relations(mul(psiN, xiN), R).is_zero()
    assert reduce_mod_relations(mul(psiN, psiP), R).is_zero()
    assert reduce_mod_relations(mul(h, psiN), R) == mul(h, psiN)


def test_reduction_is_idempotent_and_linear(psi_alg):
    xiN, psiN, h = (psi_alg.var(n) for n in ("xiN", "psiN", "h"))
    R = RelationSet.from_polys(psi_alg, annihilators=[mul(psiN, xiN)], substitutions=[(mul(h, h), h)])
    p = mul(mul(h, h), xiN) + mul(psiN, xiN) * 3
    q = mul(mul(h, h), h) + psiN
    once = reduce_mod_relations(p, R)
    assert reduce_mod_relations(once, R) == once
    assert once == mul(h, xiN)
    assert reduce_mod_relations(p + q * 2, R) == once + reduce_mod_relations(q, R) * 2


def test_step_budget_guards_reduction(psi_alg):
    h = psi_alg.var("h")
    R = RelationSet.from_polys(psi_alg, substitutions=[(h, h * 2)], budget=50)
    with pytest.raises(StepBudgetExceeded):
        reduce_mod_relations(h, R)


def test_substitute_psi_definition(psi_alg):
    alg = GradedAlgebra([("xiN", 1), ("chiN", -1), ("psiN", 0), ("h", 0)])
    xiN, chiN, psiN, h = (alg.var(n) for n in ("xiN", "chiN", "psiN", "h"))
    images = {"psiN": mul(chiN, xiN)}
    assert substitute_hom(images, mul(psiN, h)) == mul(mul(chiN, xiN), h)
    assert substitute_hom(images, mul(psiN, xiN)).is_zero()
    assert substitute_hom({}, mul(psiN, h)) == mul(psiN, h)


def test_substitute_rejects_wrong_degree():
    alg = GradedAlgebra([("xiN", 1), ("psiN", 0)])
    with pytest.raises(DegreeMismatchError):
        substitute_hom({"psiN": alg.var("xiN")}, alg.var("psiN"))


def test_substitution_is_a_homomorphism(alg):
    rng = np.random.default_rng(11)
    images = {
        "x": alg.var("y") * 2 + mul(alg.var("c1"), alg.var("b")),
        "c1": mul(alg.var("x"), alg.var("c2")),
        "e": mul(alg.var("c1"), alg.var("c2")) * Fraction(1, 3),
    }
    for _ in range(100):
        p, q = random_poly(alg, rng, 2), random_poly(alg, rng, 2)
        assert substitute_hom(images, mul(p, q)) == mul(substitute_hom(images, p), substitute_hom(images, q))
        assert substitute_hom(images, p + q) == substitute_hom(images, p) + substitute_hom(images, q)
