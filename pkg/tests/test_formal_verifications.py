import pytest

from src.formal.rules import RuleSet
from src.formal.verifications import (
    CHECKS,
    FORMAL_CHECK_IDS,
    derive_psi_n_form,
    derive_q0_square_defect,
    run_formal_check,
    verify_ideal_preservation,
    verify_qtilde_nilpotency,
)
from src.utils.reliability import UnknownCheckError


def test_ideal_preservation():
    result = verify_ideal_preservation()
    assert result.passed, result.residual
    assert result.residual == "0"
    rules = set(s.rule for s in result.trace)
    assert {"q-leibniz", "lie-recombine", "odd-nilpotent", "ideal-kill", "sharp-ideal"} <= rules


def test_ideal_preservation_needs_sharp_rule():
    result = verify_ideal_preservation(RuleSet.ideal_preservation().without(sharp_ideal=False))
    assert not result.passed
    assert "2*Lie(xiN*sharp(psiP), xiN)" in result.residual
    assert result.residual.startswith("Qt(psiN*xiN)")


def test_qtilde_nilpotency():
    result = verify_qtilde_nilpotency()
    assert result.passed, result.residual
    rules = [s.rule for s in result.trace]
    assert "qtilde-pullback" in rules and "q-square-axiom" in rules
    assert "Q^2 = 0 on generators is taken as an axiom" in result.notes


def test_qtilde_nilpotency_needs_koszul_sign():
    result = verify_qtilde_nilpotency(RuleSet.nilpotency().without(koszul_sign=False))
    assert not result.passed
    assert "2*Q(chiN)*Q(xiN)" in result.residual
    assert "2*Q(chiP)*Q(xiN)" in result.residual


def test_psi_n_form():
    result = derive_psi_n_form()
    assert result.passed, result.residual
    rules = set(s.rule for s in result.trace)
    assert {"half-density", "lie-recombine", "psi-introduction", "psi-sharp-introduction", "odd-nilpotent"} <= rules


def test_psi_n_form_needs_half_density():
    result = derive_psi_n_form(RuleSet.psi_n_form().without(half_density=False))
    assert not result.passed
    assert "vol" in result.residual


def test_q0_square_defect():
    result = derive_q0_square_defect()
    assert result.passed, result.residual
    assert "zero-section" in {s.rule for s in result.trace}


def test_q0_square_defect_needs_zero_section():
    result = derive_q0_square_defect(RuleSet.q0_defect().without(zero_section=False))
    assert not result.passed
    assert "chi" in result.residual


@pytest.mark.parametrize("check_id", FORMAL_CHECK_IDS)
def test_every_check_and_control_passes(check_id):
    result = run_formal_check(check_id)
    assert result.check_id == check_id
    assert result.passed, f"{check_id}: {result.residual}"


def test_check_ids():
    assert len(FORMAL_CHECK_IDS) == 2 * len(CHECKS) == 8
    assert "psi-n-form-control" in FORMAL_CHECK_IDS


def test_unknown_formal_check():
    with pytest.raises(UnknownCheckError):
        run_formal_check("jacobi")


def test_reports_carry_sign_notes():
    notes = " ".join(run_formal_check("psi-n-form").notes)
    assert "-Lie(xiP, .)" in notes
    assert "sharp(psiP)" in notes


def test_trace_dicts_are_serializable():
    result = run_formal_check("ideal-preservation")
    first = result.trace_dicts()[0]
    assert set(first) == {"rule", "before", "after"}
    assert first["before"] == "Qt(psiP*xiN)"
