"""
The ψ-variable computations as normal-form checks.

Every check returns a ``FormalResult``; a failed check is a result with
``passed=False`` and the printed residual, never an exception. Each check has a
control run with one rule switched off that must *fail*, so a passing check is
never vacuous.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from src.formal.expression import to_text
from src.formal.parser import parse_expression
from src.formal.qmaps import define_Q
from src.formal.rules import RuleSet, TraceStep, apply_q, canonical
from src.utils.reliability import UnknownCheckError

logger = logging.getLogger(__name__)

LIE_SIGN_NOTE = (
    "Q(h) and Q(Pi) carry -Lie(xiP, .) as in the BFV images; the horizontal Q0 of the "
    "defect section prints +Lie(xiP, .). The formal checks use the BFV sign; none of them depends on it."
)
PSI_SHARP_NOTE = (
    "Lie(sharp(psiP), xiN) denotes (Lie(sharp(chiP), xiN))*xiN. Reading psiP = chiP*xiN literally "
    "gives -Lie(sharp(chiP*xiN), xiN); the ideal checks are insensitive to this ordering sign."
)
CONVENTION_NOTES = [LIE_SIGN_NOTE, PSI_SHARP_NOTE]


@dataclass
class FormalResult:
    check_id: str
    passed: bool
    residual: str
    trace: List[TraceStep] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def trace_dicts(self) -> List[Dict[str, str]]:
        return [s.as_dict() for s in self.trace]


def _missing_rules(trace: List[TraceStep], required) -> List[str]:
    used = {s.rule for s in trace}
    return [r for r in required if r not in used]


def _run(which: str, inputs: List[str], rules: RuleSet, target: Optional[str] = None):
    """Normal forms of which(input) for each input; residuals are nonzero differences to target."""
    trace: List[TraceStep] = []
    residuals: List[str] = []
    expected = canonical(parse_expression(target)) if target is not None else None
    for text in inputs:
        result = apply_q(which, parse_expression(text), rules)
        trace.extend(result.trace)
        got = canonical(result.expr)
        if expected is not None:
            diff = canonical(got - expected)
        else:
            diff = got
        if not diff.is_zero():
            residuals.append(f"{which}({text}): {to_text(diff)}")
    return trace, residuals


def verify_ideal_preservation(rules: Optional[RuleSet] = None) -> FormalResult:
    rules = rules or RuleSet.ideal_preservation()
    trace, residuals = _run("Qt", ["psiP*xiN", "psiN*xiN"], rules)
    missing = _missing_rules(trace, ("q-leibniz", "lie-recombine", "odd-nilpotent"))
    notes = list(CONVENTION_NOTES)
    if missing:
        notes.append(f"trace lacks the steps {', '.join(missing)}")
    return FormalResult(
        "ideal-preservation",
        not residuals and not missing,
        "; ".join(residuals) or "0",
        trace,
        notes,
    )


def _images_agree(generators) -> List[str]:
    q, qt = define_Q("Q"), define_Q("Qt")
    return [g for g in generators if canonical(q.image(g)) != canonical(qt.image(g))]


def verify_qtilde_nilpotency(rules: Optional[RuleSet] = None) -> FormalResult:
    """Qt∘Qt on every generator, reduced to Q∘Q through ψ = χ ξⁿ and the Q² = 0 axiom."""
    rules = rules or RuleSet.nilpotency()
    generators = ["psiN", "psiP", "xiN", "xiP", "h", "Pi"]
    trace, residuals = _run("Qt", [f"Qt({g})" for g in generators], rules)
    disagree = _images_agree(["xiN", "xiP", "h"])
    notes = ["Q^2 = 0 on generators is taken as an axiom", *CONVENTION_NOTES]
    if disagree:
        notes.append(f"Q and Qt differ on {', '.join(disagree)}")
    return FormalResult(
        "qtilde-nilpotency",
        not residuals and not disagree,
        "; ".join(residuals) or "0",
        trace,
        notes,
    )


PSI_N_TARGET = "Hn*xiN + Lie(xiP, psiN) - 2*Lie(sharp(psiP), xiN)"


def derive_psi_n_form(rules: Optional[RuleSet] = None) -> FormalResult:
    rules = rules or RuleSet.psi_n_form()
    trace, residuals = _run("Q", ["chiN*xiN"], rules, target=PSI_N_TARGET)
    return FormalResult(
        "psi-n-form",
        not residuals,
        "; ".join(residuals) or "0",
        trace,
        [f"target {PSI_N_TARGET}", *CONVENTION_NOTES],
    )


# The only difference of Q and Q0 on (h, Pi, xi) is this term of Q(Pi).
CHI_TERM = "sharp2(tens(chiP, d(xiN)))*xiN"
Q0_DEFECT_TARGET = "sharp2(tens(HP, d(xiN)))*xiN"


def derive_q0_square_defect(rules: Optional[RuleSet] = None) -> FormalResult:
    """Q0²(Pi) at the zero section equals Q(T)|χ=0 for the χ-term T of Q(Pi)."""
    rules = rules or RuleSet.q0_defect()
    notes = [f"target {Q0_DEFECT_TARGET}", *CONVENTION_NOTES]
    difference = canonical(define_Q("Q").image("Pi") - define_Q("Q0").image("Pi"))
    expected_difference = canonical(-parse_expression(CHI_TERM))
    split_ok = difference == expected_difference
    if not split_ok:
        notes.append(f"Q(Pi) - Q0(Pi) = {to_text(difference)}, expected {to_text(expected_difference)}")
    trace, residuals = _run("Q", [CHI_TERM], rules, target=Q0_DEFECT_TARGET)
    return FormalResult(
        "q0-square-defect",
        split_ok and not residuals,
        "; ".join(residuals) or "0",
        trace,
        notes,
    )


CHECKS: Dict[str, Callable[[Optional[RuleSet]], FormalResult]] = {
    "ideal-preservation": verify_ideal_preservation,
    "qtilde-nilpotency": verify_qtilde_nilpotency,
    "psi-n-form": derive_psi_n_form,
    "q0-square-defect": derive_q0_square_defect,
}

CONTROL_MUTATIONS: Dict[str, Dict[str, bool]] = {
    "ideal-preservation": {"sharp_ideal": False},
    "qtilde-nilpotency": {"koszul_sign": False},
    "psi-n-form": {"half_density": False},
    "q0-square-defect": {"zero_section": False},
}

DEFAULT_RULES: Dict[str, Callable[[], RuleSet]] = {
    "ideal-preservation": RuleSet.ideal_preservation,
    "qtilde-nilpotency": RuleSet.nilpotency,
    "psi-n-form": RuleSet.psi_n_form,
    "q0-square-defect": RuleSet.q0_defect,
}

FORMAL_CHECK_IDS = [*CHECKS, *(f"{c}-control" for c in CHECKS)]


def run_control(check_id: str) -> FormalResult:
    """Passes iff the check fails with its rule mutation applied."""
    mutation = CONTROL_MUTATIONS[check_id]
    mutated = DEFAULT_RULES[check_id]().without(**mutation)
    result = CHECKS[check_id](mutated)
    switched = ", ".join(f"{k}={v}" for k, v in mutation.items())
    logger.info(f"{check_id} control ({switched}): mutated run {'passed' if result.passed else 'failed'}")
    return FormalResult(
        f"{check_id}-control",
        not result.passed,
        result.residual,
        result.trace,
        [f"mutation {switched}; the mutated run must fail", *result.notes],
    )


def run_formal_check(check_id: str, budget: Optional[int] = None) -> FormalResult:
    base = check_id[:-len("-control")] if check_id.endswith("-control") else check_id
    if base not in CHECKS:
        raise UnknownCheckError(check_id)
    if check_id.endswith("-control"):
        return run_control(base)
    rules = DEFAULT_RULES[base]()
    if budget is not None:
        rules = dataclasses.replace(rules, budget=budget)
    return CHECKS[base](rules)
