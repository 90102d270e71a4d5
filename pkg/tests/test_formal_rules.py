import pytest

from src.formal.expression import ZERO, expr_degree, to_text
from src.formal.parser import parse_expression
from src.formal.qmaps import define_Q
from src.formal.rules import RULE_NAMES, RuleSet, apply_q, canonical, normalize
from src.utils.reliability import ConfigurationError, StepBudgetExceeded


def nf(text, rules=None):
    return normalize(parse_expression(text), rules or RuleSet.expand_only())


def same(e, text):
    return canonical(e) == canonical(parse_expression(text))


def test_lie_leibniz_expansion():
    result = nf("Lie(xiP, psiP*xiN)")
    assert same(result.expr, "Lie(xiP, psiP)*xiN + psiP*Lie(xiP, xiN)")
    assert "lie-leibniz" in result.rules_used


def test_odd_product_vanishes():
    result = nf("xiN*h*xiN")
    assert result.expr == ZERO
    assert "odd-nilpotent" in result.rules_used


def test_nilpotent_argument_reduces_to_zero():
    assert nf("grad(h, xiN*xiN)").expr == ZERO


def test_koszul_sort_sign():
    assert to_text(nf("xiP*xiN").expr) == "-xiN*xiP"
    assert to_text(nf("h*xiN*psiN").expr) == "h*psiN*xiN"


def test_densities_merge():
    assert to_text(nf("vol^(1/2)*Hn*vol^(-1/2)").expr) == "Hn"


def test_ideal_kill():
    result = nf("psiN*xiN*d(xiN)", RuleSet.ideal_preservation())
    assert result.expr == ZERO
    assert "ideal-kill" in result.rules_used


def test_two_psi_factors_vanish():
    assert nf("psiN*psiP*h", RuleSet.ideal_preservation()).expr == ZERO


def test_psi_introduction():
    assert to_text(nf("chiN*xiN", RuleSet.psi_n_form()).expr) == "psiN"
    # chiN xiN = -xiN chiN
    assert to_text(nf("xiN*chiN", RuleSet.psi_n_form()).expr) == "-psiN"


def test_half_density_rule():
    result = nf("Lie(sharp(chiP), xiN*vol^(-1/2))*vol^(1/2)", RuleSet.psi_n_form())
    assert same(result.expr, "Lie(sharp(chiP), xiN) + 1/2*xiN*Div(sharp(chiP))")
    assert "half-density" in result.rules_used


def test_density_argument_not_expanded_without_half_density():
    rules = RuleSet.psi_n_form().without(half_density=False)
    result = nf("Lie(sharp(chiP), xiN*vol^(-1/2))*vol^(1/2)", rules)
    assert "lie-leibniz" not in result.rules_used
    assert "vol" in to_text(result.expr)


def test_lie_recombination_is_inverse_leibniz():
    rules = RuleSet.ideal_preservation()
    result = nf("Lie(xiP, psiP)*xiN + psiP*Lie(xiP, xiN)", rules)
    assert result.expr == ZERO
    assert "lie-recombine" in result.rules_used
    assert "ideal-under-operator" in result.rules_used


def test_q_operator_commutes_with_d():
    result = apply_q("Q", parse_expression("d(xiN)"), RuleSet.expand_only())
    assert same(result.expr, "d(Lie(xiP, xiN))")


def test_q_on_metric_operator_varies_the_metric():
    result = nf("Q(sharp(chiP))", RuleSet(images=False))
    assert same(result.expr, "delta_sharp(Q(h), chiP) + sharp(Q(chiP))")


def test_q_of_constant_vanishes():
    assert nf("Q(3)").expr == ZERO


def test_q_square_axiom():
    rules = RuleSet.nilpotency()
    assert nf("Q(Q(chiN))", rules).expr == ZERO
    assert nf("Q(Q(chiN*xiN))", rules).expr == ZERO


@pytest.mark.parametrize("generator,image", [
    ("xiN", "Lie(xiP, xiN)"),
    ("xiP", "xiN*grad(h, xiN) + 1/2*bracket(xiP, xiP)"),
    ("h", "-2*K*xiN - Lie(xiP, h)"),
])
def test_q_images_of_generators(generator, image):
    assert to_text(define_Q("Q").image(generator)) == image
    result = apply_q("Q", parse_expression(generator), RuleSet.expand_only())
    assert same(result.expr, image)


def test_qtilde_psi_images():
    qt = define_Q("Qt")
    assert to_text(qt.image("psiP")) == "HP*xiN + Lie(xiP, psiP) - psiN*d(xiN)"
    assert to_text(qt.image("psiN")) == "Hn*xiN + Lie(xiP, psiN) - 2*Lie(sharp(psiP), xiN)"


def test_q0_drops_antighost_terms():
    q0 = define_Q("Q0")
    assert to_text(q0.image("chiP")) == "HP"
    assert "chiP" not in to_text(q0.image("Pi"))


def test_unknown_vector_field():
    with pytest.raises(ConfigurationError):
        define_Q("Qx")


@pytest.mark.parametrize("text,rules", [
    ("Lie(xiP, psiP*xiN) - Hn*xiN*xiN", RuleSet.expand_only()),
    ("Qt(psiN*xiN)", RuleSet.ideal_preservation()),
    ("Q(chiN*xiN)", RuleSet.psi_n_form()),
    ("Q(Pi)", RuleSet.q0_defect()),
])
def test_normalize_is_idempotent(text, rules):
    first = nf(text, rules)
    second = normalize(first.expr, rules)
    assert second.expr == first.expr
    assert second.trace == []


def test_normalize_is_additive():
    a = parse_expression("Lie(xiP, psiP*xiN)")
    b = parse_expression("Q(h)*psiN")
    rules = RuleSet.expand_only()
    whole = normalize(a + b, rules).expr
    parts = canonical(normalize(a, rules).expr + normalize(b, rules).expr)
    assert whole == parts


def test_trace_steps_name_declared_rules_and_keep_parity():
    result = nf("Qt(psiP*xiN)", RuleSet.ideal_preservation())
    assert result.trace
    for s in result.trace:
        assert s.rule in RULE_NAMES
        before, after = parse_expression(s.before), parse_expression(s.after)
        if not after.is_zero():
            assert expr_degree(after) == expr_degree(before)


def test_trace_is_a_chain():
    result = nf("Qt(psiN*xiN)", RuleSet.ideal_preservation())
    for prev, nxt in zip(result.trace, result.trace[1:]):
        assert prev.after == nxt.before
    assert result.trace[-1].after == "0"


def test_step_budget():
    with pytest.raises(StepBudgetExceeded):
        nf("Qt(psiP*xiN)", RuleSet.ideal_preservation().without(budget=3))
