"""
Rewrite engine for the formal field calculus.

Rules are grouped in four phases that mirror how the hand derivations proceed:

    axiom    Q∘Q = 0 on generators, Qt pulled back to Q along ψ = χ ξⁿ
    expand   linearity, graded Leibniz for Q and Lie, generator images
    sort     odd nilpotency, Koszul sorting of factors, collecting terms
    reduce   ideal and zero-section kills, Lie recombination, ψ-introduction,
             the ψ♯ and half-density rules

One step applies exactly one rule at the outermost position where any rule of
the earliest non-empty phase matches, then the search restarts. Every step is
recorded, so a normal form comes with an auditable trace.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from src.config import config
from src.formal.expression import (
    ANTIGHOSTS,
    METRIC_OPERATORS,
    PSI,
    PSI_OF_CHI,
    Q_OPERATORS,
    SYMBOLS,
    ZERO,
    Atom,
    Expr,
    Factor,
    Op,
    Sym,
    Term,
    atom_degree,
    atom_expr,
    delta_name,
    expr_degree,
    extract,
    factor_degree,
    factor_key,
    factor_names,
    is_delta,
    is_odd,
    is_symbol,
    product,
    single_atom,
    term_key,
    to_text,
)
from src.formal.qmaps import image_of
from src.utils.reliability import StepCounter

logger = logging.getLogger(__name__)

ONE = Fraction(1)
XI_N = SYMBOLS["xiN"]
VOL = SYMBOLS["vol"]

# operators that are graded-Leibniz in all their arguments under Q
MULTILINEAR = ("Lie", "bracket", "tens")


@dataclass(frozen=True)
class RuleSet:
    """Switches for the optional rules; expansion and sorting are always on."""
    name: str = "expand"
    images: bool = True            # q-image
    axioms: bool = False           # q-square-axiom
    pullback: bool = False         # qtilde-pullback
    koszul_sign: bool = True       # (-1)^{|a|} in the Q-Leibniz rules
    ideal: bool = False            # psi-relations, ideal-kill, ideal-under-operator
    zero_section: bool = False
    recombine: bool = False        # lie-recombine
    absorb: bool = False           # lie-absorb
    sharp_ideal: bool = False
    psi_intro: bool = False        # psi-introduction
    psi_sharp: bool = False        # psi-sharp-introduction
    half_density: bool = False
    budget: int = field(default_factory=lambda: config.STEP_BUDGET)

    def without(self, **flags: bool) -> "RuleSet":
        return dataclasses.replace(self, name=f"{self.name}-mutated", **flags)

    @classmethod
    def expand_only(cls) -> "RuleSet":
        return cls()

    @classmethod
    def ideal_preservation(cls) -> "RuleSet":
        return cls("ideal-preservation", ideal=True, recombine=True, absorb=True, sharp_ideal=True)

    @classmethod
    def nilpotency(cls) -> "RuleSet":
        # images stay unexpanded: the cancellation is structural, Q² = 0 is an axiom
        return cls("qtilde-nilpotency", images=False, axioms=True, pullback=True)

    @classmethod
    def psi_n_form(cls) -> "RuleSet":
        return cls("psi-n-form", recombine=True, psi_intro=True, psi_sharp=True, half_density=True)

    @classmethod
    def q0_defect(cls) -> "RuleSet":
        return cls("q0-square-defect", zero_section=True)


@dataclass(frozen=True)
class Where:
    depth: int = 0
    parent: Optional[str] = None
    arg_index: int = 0
    inside_q: bool = False

    def child(self, op_name: str, index: int) -> "Where":
        return Where(self.depth + 1, op_name, index, self.inside_q or op_name in Q_OPERATORS)


@dataclass(frozen=True)
class TraceStep:
    rule: str
    before: str
    after: str

    def as_dict(self) -> Dict[str, str]:
        return {"rule": self.rule, "before": self.before, "after": self.after}


@dataclass
class NormalizeResult:
    expr: Expr
    trace: List[TraceStep]

    @property
    def rules_used(self) -> List[str]:
        return [s.rule for s in self.trace]


# ---------------------------------------------------------------------------
# Small helpers
# ---------------------------------------------------------------------------

def _one(atom: Atom, power: Fraction = ONE) -> Expr:
    return atom_expr(atom, power)


def _factors_expr(factors, coef: Fraction = ONE) -> Expr:
    return Expr((Term(Fraction(coef), tuple(factors)),)) if coef else ZERO


def _sign(degree_a: int, degree_b: int) -> int:
    return -1 if (degree_a * degree_b) % 2 else 1


def _is_sym(atom: Atom, *names: str) -> bool:
    return isinstance(atom, Sym) and atom.name in names


def _in_ideal(term: Term) -> bool:
    names = factor_names(term)
    return "xiN" in names and any(n in PSI for n in names)


def _is_psi_definition(term: Term) -> bool:
    names = factor_names(term)
    return "xiN" in names and any(n in ANTIGHOSTS for n in names)


def _is_half_density(term: Term) -> bool:
    got = sorted((a.name, p) for a, p in term.factors if isinstance(a, Sym))
    return len(got) == len(term.factors) == 2 and got == [("vol", Fraction(-1, 2)), ("xiN", ONE)]


def _has_density_power(term: Term) -> bool:
    return any(p.denominator != 1 for _, p in term.factors)


def _contains_sharp_psi(e: Expr) -> bool:
    for t in e.terms:
        for atom, _ in t.factors:
            if isinstance(atom, Op) and atom.name == "sharp":
                inner = single_atom(atom.args[0])
                if _is_sym(inner, *PSI):
                    return True
    return False


def _with_arg(atom: Op, index: int, arg: Expr) -> Op:
    return Op(atom.name, atom.args[:index] + (arg,) + atom.args[index + 1:])


def _replace_term(e: Expr, i: int, replacement: Expr) -> Expr:
    return Expr(e.terms[:i] + replacement.terms + e.terms[i + 1:])


def _replace_factor(e: Expr, i: int, j: int, replacement: Expr) -> Expr:
    t = e.terms[i]
    spliced = tuple(
        Term(t.coef * r.coef, t.factors[:j] + r.factors + t.factors[j + 1:])
        for r in replacement.terms
    )
    return Expr(e.terms[:i] + spliced + e.terms[i + 1:])


def _linearize(atom: Op, indices) -> Optional[Expr]:
    """Distribute an operator over a sum or pull a coefficient out of one argument."""
    for k in indices:
        arg = atom.args[k]
        if arg.is_zero():
            return ZERO
        if len(arg.terms) > 1:
            out = ZERO
            for t in arg.terms:
                out = out + _linearize_term(atom, k, t)
            return out
        t = arg.terms[0]
        if t.coef != 1:
            return _linearize_term(atom, k, t)
    return None


def _linearize_term(atom: Op, k: int, t: Term) -> Expr:
    return _one(_with_arg(atom, k, _factors_expr(t.factors))).scale(t.coef)


def _graded_leibniz_over_args(atom: Op, inner: Op, koszul_sign: bool) -> Expr:
    """Q(op(a1..an)) = Σ_k (−1)^{|a1|+..+|a_{k−1}|} op(a1, .., Q a_k, .., an)."""
    out = ZERO
    passed = 0
    for k, arg in enumerate(inner.args):
        qa = _one(Op(atom.name, (arg,)))
        s = _sign(1, passed) if koszul_sign else 1
        out = out + _one(_with_arg(inner, k, qa)).scale(s)
        passed += expr_degree(arg)
    return out


# ---------------------------------------------------------------------------
# Canonical form (sorting only)
# ---------------------------------------------------------------------------

def _canonical_atom(atom: Atom) -> Atom:
    if isinstance(atom, Sym):
        return atom
    return Op(atom.name, tuple(canonical(a) for a in atom.args))


def _vanishes(factors) -> bool:
    odd = [a for a, p in factors if atom_degree(a) % 2]
    if any(p != 1 for a, p in factors if atom_degree(a) % 2):
        return True
    return len(odd) != len(set(odd))


def _koszul_sorted(coef: Fraction, factors) -> Term:
    """Factors in canonical order with the sign of the odd swaps; equal even atoms merge."""
    order = sorted(range(len(factors)), key=lambda i: factor_key(factors[i]))
    odd = [is_odd(f) for f in factors]
    sign = 1
    for x in range(len(order)):
        for y in range(x + 1, len(order)):
            if order[x] > order[y] and odd[order[x]] and odd[order[y]]:
                sign = -sign
    merged: List[Factor] = []
    for i in order:
        a, p = factors[i]
        if merged and merged[-1][0] == a and not atom_degree(a) % 2:
            merged[-1] = (a, merged[-1][1] + p)
        else:
            merged.append((a, p))
    return Term(coef * sign, tuple((a, p) for a, p in merged if p != 0))


def _sorted_term(term: Term) -> Optional[Term]:
    """Koszul-sorted term with canonical arguments; None when it vanishes."""
    factors = [(_canonical_atom(a), p) for a, p in term.factors]
    if _vanishes(factors):
        return None
    return _koszul_sorted(term.coef, factors)


def _collect(terms) -> Expr:
    coeffs: Dict[Tuple, Fraction] = {}
    for t in terms:
        coeffs[t.factors] = coeffs.get(t.factors, Fraction(0)) + t.coef
    out = [Term(c, f) for f, c in coeffs.items() if c]
    out.sort(key=term_key)
    return Expr(tuple(out))


def canonical(e: Expr) -> Expr:
    """Sorted, nilpotency-reduced and collected form; no other rule is applied."""
    terms = []
    for t in e.terms:
        s = _sorted_term(t)
        if s is not None:
            terms.append(s)
    return _collect(terms)


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    name: str
    level: str                    # "expr", "term" or "factor"
    fn: Callable
    flag: Optional[str] = None    # RuleSet switch, None = always on

    def enabled(self, rules: RuleSet) -> bool:
        return self.flag is None or bool(getattr(rules, self.flag))


def _q_arg(atom: Atom) -> Optional[Expr]:
    if isinstance(atom, Op) and atom.name in Q_OPERATORS:
        return atom.args[0]
    return None


def q_square_axiom(atom, power, rules, where):
    arg = _q_arg(atom)
    if arg is None or atom.name != "Q":
        return None
    inner = single_atom(arg)
    if isinstance(inner, Op) and inner.name == "Q" and isinstance(single_atom(inner.args[0]), Sym):
        return ZERO
    return None


def _pull_back(e: Expr) -> Expr:
    """f*: ψ_• ↦ χ_• ξⁿ, Qt ↦ Q."""
    out = []
    for t in e.terms:
        factors: List[Factor] = []
        dead = False
        for atom, p in t.factors:
            if _is_sym(atom, *PSI):
                if p != 1:
                    dead = True
                    break
                chi = next(c for c, s in PSI_OF_CHI.items() if s == atom.name)
                factors.extend([(SYMBOLS[chi], ONE), (XI_N, ONE)])
            elif isinstance(atom, Op):
                name = "Q" if atom.name == "Qt" else atom.name
                factors.append((Op(name, tuple(_pull_back(a) for a in atom.args)), p))
            else:
                factors.append((atom, p))
        if not dead:
            out.append(Term(t.coef, tuple(factors)))
    return Expr(tuple(out))


def qtilde_pullback(atom, power, rules, where):
    if isinstance(atom, Op) and atom.name == "Qt":
        return _one(Op("Q", (_pull_back(atom.args[0]),)), power)
    return None


def q_linear(atom, power, rules, where):
    arg = _q_arg(atom)
    if arg is None or power != 1:
        return None
    if any(not t.factors for t in arg.terms) and arg.terms:
        # Q of a constant vanishes
        kept = Expr(tuple(t for t in arg.terms if t.factors))
        return _one(Op(atom.name, (kept,))) if kept.terms else ZERO
    return _linearize(atom, [0])


def q_leibniz(atom, power, rules, where):
    arg = _q_arg(atom)
    if arg is None or power != 1 or len(arg.terms) != 1 or arg.terms[0].coef != 1:
        return None
    factors = arg.terms[0].factors
    if len(factors) >= 2:
        first, rest = factors[0], factors[1:]
        s = _sign(factor_degree(first), 1) if rules.koszul_sign else 1
        q_first = _one(Op(atom.name, (_factors_expr([first]),)))
        q_rest = _one(Op(atom.name, (_factors_expr(rest),)))
        return product(q_first, _factors_expr(rest)) + product(_factors_expr([first]), q_rest).scale(s)
    if len(factors) == 1 and factors[0][1] != 1:
        base, p = factors[0]
        q_base = _one(Op(atom.name, (_one(base),)))
        return product(_factors_expr([(base, p - 1)]), q_base).scale(p)
    return None


def q_image(atom, power, rules, where):
    arg = _q_arg(atom)
    if arg is None or power != 1:
        return None
    generator = single_atom(arg)
    if not isinstance(generator, Sym):
        return None
    return image_of(atom.name, generator.name)


def q_operator(atom, power, rules, where):
    arg = _q_arg(atom)
    if arg is None or power != 1:
        return None
    inner = single_atom(arg)
    if not isinstance(inner, Op) or inner.name in Q_OPERATORS:
        return None
    if inner.name in MULTILINEAR or is_delta(inner.name):
        return _graded_leibniz_over_args(atom, inner, rules.koszul_sign)
    if inner.name == "d":
        return _one(Op("d", (_one(Op(atom.name, inner.args)),)))
    if inner.name in METRIC_OPERATORS:
        q_h = _one(Op(atom.name, (_one(SYMBOLS["h"]),)))
        operands = inner.args[1:] if inner.name == "grad" else inner.args
        varied = _one(Op(delta_name(inner.name), (q_h,) + operands))
        k = len(inner.args) - 1
        moved = _one(_with_arg(inner, k, _one(Op(atom.name, (inner.args[k],)))))
        return varied + moved
    return None


def lie_linear(atom, power, rules, where):
    if not isinstance(atom, Op) or atom.name != "Lie":
        return None
    target = atom.args[1]
    if target.terms and all(not t.factors for t in target.terms):
        return ZERO
    if any(not t.factors for t in target.terms):
        kept = Expr(tuple(t for t in target.terms if t.factors))
        return _one(_with_arg(atom, 1, kept), power)
    if power != 1:
        return None
    return _linearize(atom, [0, 1])


def op_linear(atom, power, rules, where):
    if not isinstance(atom, Op) or atom.name in Q_OPERATORS or atom.name == "Lie" or power != 1:
        return None
    if atom.name == "d":
        arg = atom.args[0]
        if arg.terms and any(not t.factors for t in arg.terms):
            kept = Expr(tuple(t for t in arg.terms if t.factors))
            return _one(Op("d", (kept,))) if kept.terms else ZERO
    indices = range(1, len(atom.args)) if atom.name == "grad" else range(len(atom.args))
    return _linearize(atom, indices)


def _lie_leibniz_blocked(term: Term, rules: RuleSet) -> bool:
    if _has_density_power(term):
        # densities under a Lie derivative are only handled by half-density
        return True
    if rules.ideal and _in_ideal(term):
        return True
    if rules.psi_intro and _is_psi_definition(term):
        return True
    return False


def lie_leibniz(atom, power, rules, where):
    if not isinstance(atom, Op) or atom.name != "Lie" or power != 1:
        return None
    vector, target = atom.args
    if len(target.terms) != 1 or target.terms[0].coef != 1:
        return None
    t = target.terms[0]
    if len(t.factors) < 2 or _lie_leibniz_blocked(t, rules):
        return None
    first, rest = t.factors[0], t.factors[1:]
    s = _sign(expr_degree(vector), factor_degree(first))
    left = product(_one(Op("Lie", (vector, _factors_expr([first])))), _factors_expr(rest))
    right = product(_factors_expr([first]), _one(Op("Lie", (vector, _factors_expr(rest)))))
    return left + right.scale(s)


def odd_nilpotent(term, rules, where):
    return ZERO if _vanishes(term.factors) else None


def koszul_sort(term, rules, where):
    # arguments are sorted when the engine descends; only reorder this level
    result = _koszul_sorted(term.coef, term.factors)
    return None if result == term else Expr((result,))


def collect(e, rules, where):
    result = _collect(e.terms)
    return None if result == e else result


def psi_relations(term, rules, where):
    if sum(p for a, p in term.factors if _is_sym(a, *PSI)) >= 2:
        return ZERO
    return None


def ideal_kill(term, rules, where):
    if where.depth == 0 and _in_ideal(term):
        return ZERO
    return None


def ideal_under_operator(term, rules, where):
    if where.depth > 0 and not where.inside_q and _in_ideal(term):
        return ZERO
    return None


def zero_section(term, rules, where):
    if not where.inside_q and any(n in ANTIGHOSTS for n in factor_names(term)):
        return ZERO
    return None


def _recombinable(a: Atom, b: Atom, rules: RuleSet) -> bool:
    joined = canonical(_factors_expr([(a, ONE), (b, ONE)]))
    if joined.is_zero() or len(joined.terms) != 1:
        return False
    t = joined.terms[0]
    return (rules.ideal and _in_ideal(t)) or (rules.psi_intro and _is_psi_definition(t))


def _leibniz_pair(coef: Fraction, vector: Expr, a: Atom, b: Atom, rest) -> Expr:
    """coef·Lie(Y, a·b)·rest expanded once: coef·(Lie(Y,a)·b + (−1)^{|Y||a|} a·Lie(Y,b))·rest."""
    s = _sign(expr_degree(vector), atom_degree(a))
    first = (Op("Lie", (vector, _one(a))), ONE)
    second = (Op("Lie", (vector, _one(b))), ONE)
    return Expr((
        Term(coef, (first, (b, ONE)) + tuple(rest)),
        Term(coef * s, ((a, ONE), second) + tuple(rest)),
    ))


def lie_recombine(e, rules, where):
    """Inverse Leibniz: (L_Y a) b + (−1)^{|Y||a|} a L_Y b → L_Y(a b) when a b is in the ideal or defines ψ."""
    present = {t.factors: t.coef for t in e.terms}
    for t in e.terms:
        for p, (atom, power) in enumerate(t.factors):
            if not isinstance(atom, Op) or atom.name != "Lie" or power != 1:
                continue
            a = single_atom(atom.args[1])
            if not isinstance(a, Sym):
                continue
            for q, (b, bp) in enumerate(t.factors):
                if q == p or b != XI_N or bp != 1 or not _recombinable(a, b, rules):
                    continue
                sign, _, rest = extract(t, [p, q])
                coef = t.coef * sign
                expanded = canonical(_leibniz_pair(coef, atom.args[0], a, b, rest))
                if expanded.is_zero():
                    continue
                if all(present.get(x.factors) == x.coef for x in expanded.terms):
                    drop = {x.factors for x in expanded.terms}
                    kept = tuple(x for x in e.terms if x.factors not in drop)
                    joined = (Op("Lie", (atom.args[0], _factors_expr([(a, ONE), (b, ONE)]))), ONE)
                    return Expr(kept + (Term(coef, (joined,) + tuple(rest)),))
    return None


def lie_absorb(term, rules, where):
    """(L_Y ξⁿ) ξⁿ → (−1)^{|ξⁿ||ξⁿ|} L_{Y ξⁿ} ξⁿ for Y built on ψ_∂♯."""
    for p, (atom, power) in enumerate(term.factors):
        if not isinstance(atom, Op) or atom.name != "Lie" or power != 1:
            continue
        vector, target = atom.args
        if not is_symbol(target, "xiN") or not _contains_sharp_psi(vector):
            continue
        for q, (b, bp) in enumerate(term.factors):
            if q != p and b == XI_N and bp == 1:
                sign, _, rest = extract(term, [p, q])
                absorbed = Op("Lie", (product(vector, _one(XI_N)), target))
                return _factors_expr([(absorbed, ONE)] + rest, term.coef * sign * _sign(1, 1))
    return None


def sharp_ideal(term, rules, where):
    if where.parent != "Lie" or where.arg_index != 0:
        return None
    names = factor_names(term)
    if "xiN" in names and _contains_sharp_psi(Expr((term,))):
        return ZERO
    return None


def psi_introduction(term, rules, where):
    if where.inside_q:
        return None
    p = next((i for i, (a, pw) in enumerate(term.factors) if _is_sym(a, *ANTIGHOSTS) and pw == 1), None)
    q = next((i for i, (a, pw) in enumerate(term.factors) if a == XI_N and pw == 1), None)
    if p is None or q is None:
        return None
    sign, moved, rest = extract(term, [p, q])
    psi = SYMBOLS[PSI_OF_CHI[moved[0][0].name]]
    return _factors_expr([(psi, ONE)] + rest, term.coef * sign)


def psi_sharp_introduction(term, rules, where):
    """(L_{χ_∂♯} ξⁿ) ξⁿ =: L_{ψ_∂♯} ξⁿ."""
    for p, (atom, power) in enumerate(term.factors):
        if not isinstance(atom, Op) or atom.name != "Lie" or power != 1:
            continue
        vector = single_atom(atom.args[0])
        if not (isinstance(vector, Op) and vector.name == "sharp" and is_symbol(vector.args[0], "chiP")):
            continue
        if not is_symbol(atom.args[1], "xiN"):
            continue
        for q, (b, bp) in enumerate(term.factors):
            if q != p and b == XI_N and bp == 1:
                sign, _, rest = extract(term, [p, q])
                lie = Op("Lie", (_one(Op("sharp", (_one(SYMBOLS["psiP"]),))), _one(XI_N)))
                return _factors_expr([(lie, ONE)] + rest, term.coef * sign)
    return None


def half_density(term, rules, where):
    """L_X(ξⁿ vol^{−½}) vol^{½} → L_X ξⁿ + ½ ξⁿ Div(X)."""
    for p, (atom, power) in enumerate(term.factors):
        if not isinstance(atom, Op) or atom.name != "Lie" or power != 1:
            continue
        target = atom.args[1]
        if len(target.terms) != 1 or target.terms[0].coef != 1 or not _is_half_density(target.terms[0]):
            continue
        for q, (b, bp) in enumerate(term.factors):
            if q != p and b == VOL and bp == Fraction(1, 2):
                sign, _, rest = extract(term, [p, q])
                vector = atom.args[0]
                coef = term.coef * sign
                lie = (Op("Lie", (vector, _one(XI_N))), ONE)
                div = (Op("Div", (vector,)), ONE)
                return Expr((
                    Term(coef, (lie,) + tuple(rest)),
                    Term(coef / 2, ((XI_N, ONE), div) + tuple(rest)),
                ))
    return None


PHASES: List[Tuple[str, List[Rule]]] = [
    ("axiom", [
        Rule("q-square-axiom", "factor", q_square_axiom, "axioms"),
        Rule("qtilde-pullback", "factor", qtilde_pullback, "pullback"),
    ]),
    ("expand", [
        Rule("q-linear", "factor", q_linear),
        Rule("q-leibniz", "factor", q_leibniz),
        Rule("q-image", "factor", q_image, "images"),
        Rule("q-operator", "factor", q_operator),
        Rule("lie-linear", "factor", lie_linear),
        Rule("op-linear", "factor", op_linear),
        Rule("lie-leibniz", "factor", lie_leibniz),
    ]),
    ("sort", [
        Rule("odd-nilpotent", "term", odd_nilpotent),
        Rule("koszul-sort", "term", koszul_sort),
        Rule("collect", "expr", collect),
    ]),
    ("reduce", [
        Rule("psi-relations", "term", psi_relations, "ideal"),
        Rule("ideal-kill", "term", ideal_kill, "ideal"),
        Rule("ideal-under-operator", "term", ideal_under_operator, "ideal"),
        Rule("zero-section", "term", zero_section, "zero_section"),
        Rule("lie-recombine", "expr", lie_recombine, "recombine"),
        Rule("lie-absorb", "term", lie_absorb, "absorb"),
        Rule("sharp-ideal", "term", sharp_ideal, "sharp_ideal"),
        Rule("psi-introduction", "term", psi_introduction, "psi_intro"),
        Rule("psi-sharp-introduction", "term", psi_sharp_introduction, "psi_sharp"),
        Rule("half-density", "term", half_density, "half_density"),
    ]),
]

RULE_NAMES = [r.name for _, phase in PHASES for r in phase]


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

def _step_at(e: Expr, phase: List[Rule], rules: RuleSet, where: Where) -> Optional[Tuple[str, Expr]]:
    for rule in phase:
        if rule.level == "expr":
            out = rule.fn(e, rules, where)
            if out is not None:
                return rule.name, out
        elif rule.level == "term":
            for i, t in enumerate(e.terms):
                out = rule.fn(t, rules, where)
                if out is not None:
                    return rule.name, _replace_term(e, i, out)
        else:
            for i, t in enumerate(e.terms):
                for j, (atom, power) in enumerate(t.factors):
                    out = rule.fn(atom, power, rules, where)
                    if out is not None:
                        return rule.name, _replace_factor(e, i, j, out)

    for i, t in enumerate(e.terms):
        for j, (atom, power) in enumerate(t.factors):
            if not isinstance(atom, Op):
                continue
            for k, arg in enumerate(atom.args):
                hit = _step_at(arg, phase, rules, where.child(atom.name, k))
                if hit is not None:
                    name, new_arg = hit
                    if new_arg.is_zero():
                        # every operator is linear in each argument
                        return name, _replace_factor(e, i, j, ZERO)
                    return name, _replace_factor(e, i, j, _one(_with_arg(atom, k, new_arg), power))
    return None


def step(e: Expr, rules: RuleSet) -> Optional[Tuple[str, Expr]]:
    """One rewrite: the first phase with a match wins, outermost position first."""
    for _, phase in PHASES:
        active = [r for r in phase if r.enabled(rules)]
        hit = _step_at(e, active, rules, Where())
        if hit is not None:
            return hit
    return None


def normalize(e: Expr, rules: RuleSet) -> NormalizeResult:
    counter = StepCounter(rules.budget, f"normalize[{rules.name}]")
    trace: List[TraceStep] = []
    current = e
    while True:
        hit = step(current, rules)
        if hit is None:
            break
        counter.tick()
        name, after = hit
        trace.append(TraceStep(name, to_text(current), to_text(after)))
        current = after
    logger.debug(f"{rules.name}: normal form after {len(trace)} steps: {to_text(current)}")
    return NormalizeResult(current, trace)


def apply_q(which: str, e: Expr, rules: RuleSet) -> NormalizeResult:
    """Normal form of which(e) for which in Q, Qt, Q0."""
    return normalize(_one(Op(which, (e,))), rules)
