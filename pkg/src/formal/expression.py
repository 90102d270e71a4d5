"""
Expressions of the formal field calculus.

An ``Expr`` is a sum of terms ``coef * f1 * f2 * ...`` where every factor is an
atom raised to a power. Atoms are field symbols or operator applications whose
arguments are again expressions. Nothing is simplified on construction: factor
order and term order are kept as written, so the rewrite engine can show every
sign it introduces. Operators (Lie derivatives, d, grad, musical maps, Div, ...)
are opaque; only the rules in ``rules.py`` know anything about them.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple, Union

from src.utils.reliability import KindError

# base kinds; weights are density weights and stay advisory
SCALAR, VECTOR, FORM, SYM2, SYM2_UP = "scalar", "vector", "form", "sym2", "sym2_up"
TENSOR_KINDS = (SCALAR, VECTOR, FORM, SYM2, SYM2_UP)


@dataclass(frozen=True)
class Kind:
    base: str
    weight: int = 0

    def __str__(self) -> str:
        return self.base if not self.weight else f"{self.base}[w{self.weight}]"


@dataclass(frozen=True)
class Sym:
    name: str
    degree: int
    kind: Kind


@dataclass(frozen=True)
class Op:
    name: str
    args: Tuple["Expr", ...]


Atom = Union[Sym, Op]
Factor = Tuple[Atom, Fraction]


@dataclass(frozen=True)
class Term:
    coef: Fraction
    factors: Tuple[Factor, ...] = ()


@dataclass(frozen=True)
class Expr:
    terms: Tuple[Term, ...] = ()

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Expr") -> "Expr":
        return Expr(self.terms + other.terms)

    def __neg__(self) -> "Expr":
        return self.scale(-1)

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-other)

    def __mul__(self, other: Union["Expr", int, Fraction]) -> "Expr":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return product(self, other)

    def __rmul__(self, other: Union[int, Fraction]) -> "Expr":
        return self.scale(other)

    def scale(self, c: Union[int, Fraction]) -> "Expr":
        c = Fraction(c)
        if not c:
            return ZERO
        return Expr(tuple(Term(t.coef * c, t.factors) for t in self.terms))

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Expr({to_text(self)})"


ZERO = Expr()


def product(a: Expr, b: Expr) -> Expr:
    """Distributes, keeping the written factor order."""
    return Expr(tuple(Term(x.coef * y.coef, x.factors + y.factors) for x in a.terms for y in b.terms))


def const(c: Union[int, Fraction]) -> Expr:
    c = Fraction(c)
    return Expr((Term(c),)) if c else ZERO


def atom_expr(atom: Atom, power: Fraction = Fraction(1), coef: Fraction = Fraction(1)) -> Expr:
    return Expr((Term(Fraction(coef), ((atom, Fraction(power)),)),))


def term_expr(term: Term) -> Expr:
    return Expr((term,)) if term.coef else ZERO


# ---------------------------------------------------------------------------
# Field content
# ---------------------------------------------------------------------------

SYMBOLS: Dict[str, Sym] = {s.name: s for s in (
    Sym("xiN", 1, Kind(SCALAR)),
    Sym("xiP", 1, Kind(VECTOR)),
    Sym("chiN", -1, Kind(SCALAR, 1)),
    Sym("chiP", -1, Kind(FORM, 1)),
    Sym("psiN", 0, Kind(SCALAR, 1)),
    Sym("psiP", 0, Kind(FORM, 1)),
    Sym("h", 0, Kind(SYM2)),
    Sym("Pi", 0, Kind(SYM2_UP, 1)),
    Sym("Hn", 0, Kind(SCALAR, 1)),
    Sym("HP", 0, Kind(FORM, 1)),
    Sym("K", 0, Kind(SYM2)),
    Sym("G", 0, Kind(SYM2)),
    Sym("Pit", 0, Kind(SYM2_UP, 1)),
    Sym("vol", 0, Kind(SCALAR, 1)),
)}

GHOSTS = ("xiN", "xiP")
ANTIGHOSTS = ("chiN", "chiP")
PSI = ("psiN", "psiP")
# psi_• ≐ chi_• xiN
PSI_OF_CHI = {"chiN": "psiN", "chiP": "psiP"}
CHI_OF_PSI = {v: k for k, v in PSI_OF_CHI.items()}

Q_OPERATORS = ("Q", "Qt", "Q0")
METRIC_OPERATORS = ("grad", "sharp", "flat", "sharp2", "Div", "Dh")

# operator -> (argument kinds, result); None accepts any tensor kind,
# "same" returns the kind of the last argument
OPERATORS: Dict[str, Tuple[Tuple[Optional[str], ...], Optional[str]]] = {
    "Lie": ((VECTOR, None), "same"),
    "d": ((SCALAR,), FORM),
    "grad": ((SYM2, SCALAR), VECTOR),
    "sharp": ((FORM,), VECTOR),
    "flat": ((VECTOR,), FORM),
    "sharp2": ((SYM2,), SYM2_UP),
    "tens": ((FORM, FORM), SYM2),
    "bracket": ((VECTOR, VECTOR), VECTOR),
    "Div": ((VECTOR,), SCALAR),
    "Dh": ((SCALAR,), SYM2),
    "Q": ((None,), "same"),
    "Qt": ((None,), "same"),
    "Q0": ((None,), "same"),
}


def sym(name: str) -> Expr:
    try:
        return atom_expr(SYMBOLS[name])
    except KeyError:
        raise KindError(name, "unknown field symbol")


def op(name: str, *args: Expr) -> Expr:
    check_operator(name, args)
    return atom_expr(Op(name, tuple(args)))


def delta_name(metric_op: str) -> str:
    return f"delta_{metric_op}"


def is_delta(name: str) -> bool:
    return name.startswith("delta_") and name[6:] in METRIC_OPERATORS


# ---------------------------------------------------------------------------
# Degrees and kinds
# ---------------------------------------------------------------------------

def atom_degree(atom: Atom) -> int:
    if isinstance(atom, Sym):
        return atom.degree
    total = sum(expr_degree(a) for a in atom.args)
    return total + 1 if atom.name in Q_OPERATORS else total


def factor_degree(factor: Factor) -> int:
    atom, power = factor
    d = atom_degree(atom)
    return d * int(power) if d else 0


def term_degree(term: Term) -> int:
    return sum(factor_degree(f) for f in term.factors)


def expr_degree(e: Expr) -> int:
    return term_degree(e.terms[0]) if e.terms else 0


def is_odd(factor: Factor) -> bool:
    return factor_degree(factor) % 2 == 1


def atom_kind(atom: Atom) -> Optional[str]:
    if isinstance(atom, Sym):
        return atom.kind.base
    if is_delta(atom.name):
        # metric variation of op(A) has the kind of op(A)
        return OPERATORS[atom.name[6:]][1]
    _, result = OPERATORS[atom.name]
    if result == "same":
        return expr_kind(atom.args[-1])
    return result


def term_kind(term: Term) -> Optional[str]:
    kinds = [atom_kind(a) for a, _ in term.factors]
    tensorial = [k for k in kinds if k not in (SCALAR, None)]
    if not tensorial:
        return SCALAR
    if len(tensorial) == 1:
        return tensorial[0]
    return "mixed"


def expr_kind(e: Expr) -> Optional[str]:
    kinds = {term_kind(t) for t in e.terms if t.factors}
    if not kinds:
        return None
    if len(kinds) > 1:
        raise KindError("+", f"sum of different kinds {sorted(k or '?' for k in kinds)}")
    return kinds.pop()


def check_operator(name: str, args: Iterable[Expr]):
    args = tuple(args)
    if is_delta(name):
        return
    if name not in OPERATORS:
        raise KindError(name, "unknown operator")
    expected, _ = OPERATORS[name]
    if len(args) != len(expected):
        raise KindError(name, f"takes {len(expected)} argument(s), got {len(args)}")
    if name == "grad" and args[0] != sym("h"):
        raise KindError(name, "first argument must be the metric h")
    for i, (want, arg) in enumerate(zip(expected, args)):
        got = expr_kind(arg)
        if got is None:
            continue
        if want is None:
            if got not in TENSOR_KINDS:
                raise KindError(name, f"argument {i + 1} has kind {got}")
        elif got != want:
            raise KindError(name, f"argument {i + 1} must be {want}, got {got}")


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _fraction_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def atom_text(atom: Atom) -> str:
    if isinstance(atom, Sym):
        return atom.name
    return f"{atom.name}(" + ", ".join(to_text(a) for a in atom.args) + ")"


def factor_text(factor: Factor) -> str:
    atom, power = factor
    text = atom_text(atom)
    if power == 1:
        return text
    if power.denominator == 1 and power > 0:
        return f"{text}^{power.numerator}"
    return f"{text}^({_fraction_text(power)})"


def term_text(term: Term) -> str:
    """Unsigned body of a term; the sign is handled by ``to_text``."""
    c = abs(term.coef)
    body = "*".join(factor_text(f) for f in term.factors)
    if not body:
        return _fraction_text(c)
    return body if c == 1 else f"{_fraction_text(c)}*{body}"


def to_text(e: Expr) -> str:
    if not e.terms:
        return "0"
    out = ""
    for i, t in enumerate(e.terms):
        neg = t.coef < 0
        if i == 0:
            out = ("-" if neg else "") + term_text(t)
        else:
            out += (" - " if neg else " + ") + term_text(t)
    return out


def atom_key(atom: Atom) -> Tuple[int, str]:
    return (0, atom.name) if isinstance(atom, Sym) else (1, atom_text(atom))


def factor_key(factor: Factor) -> Tuple[Tuple[int, str], Fraction]:
    return (atom_key(factor[0]), factor[1])


def term_key(term: Term) -> Tuple:
    return tuple(factor_key(f) for f in term.factors)


# ---------------------------------------------------------------------------
# Queries used by the rules
# ---------------------------------------------------------------------------

def symbols_in(e: Expr) -> List[str]:
    """Every symbol name occurring anywhere in e, operator arguments included."""
    out: List[str] = []
    for t in e.terms:
        for atom, _ in t.factors:
            if isinstance(atom, Sym):
                out.append(atom.name)
            else:
                for a in atom.args:
                    out.extend(symbols_in(a))
    return out


def single_atom(e: Expr) -> Optional[Atom]:
    """The atom of an expression that is exactly ``1 * atom^1``."""
    if len(e.terms) == 1:
        t = e.terms[0]
        if t.coef == 1 and len(t.factors) == 1 and t.factors[0][1] == 1:
            return t.factors[0][0]
    return None


def is_symbol(e: Expr, name: str) -> bool:
    atom = single_atom(e)
    return isinstance(atom, Sym) and atom.name == name


def factor_names(term: Term) -> List[str]:
    return [a.name for a, _ in term.factors if isinstance(a, Sym)]


def extract(term: Term, positions: List[int]) -> Tuple[int, List[Factor], List[Factor]]:
    """
    Bring the factors at ``positions`` to the front in the given order.
    Returns (sign, moved, rest) with term = sign * moved * rest.
    """
    remaining = list(range(len(term.factors)))
    sign = 1
    for p in positions:
        idx = remaining.index(p)
        passed = sum(factor_degree(term.factors[q]) for q in remaining[:idx])
        if is_odd(term.factors[p]) and passed % 2:
            sign = -sign
        remaining.pop(idx)
    moved = [term.factors[p] for p in positions]
    rest = [term.factors[q] for q in remaining]
    return sign, moved, rest
