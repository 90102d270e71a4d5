"""
Front end for the field-calculus language.

    expr   := term (('+' | '-') term)*
    term   := ['-'] factor ('*' factor)*
    factor := atom ['^' power]
    atom   := NUMBER ['/' NUMBER] | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
    power  := NUMBER | '(' ['-'] NUMBER ['/' NUMBER] ')'

Products distribute over parenthesized sums; nothing else is simplified, so
``parse_expression(to_text(e)) == e`` for every expression the printer emits.
"""

import re
from fractions import Fraction
from typing import List, Tuple

from src.formal.expression import (
    OPERATORS,
    SYMBOLS,
    Expr,
    Op,
    atom_expr,
    check_operator,
    const,
    is_delta,
    product,
    single_atom,
)
from src.utils.reliability import ParseError

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def tokenize(text: str) -> List[Tuple[str, str, int]]:
    """(kind, value, position) triples; kind is NUM, NAME or the punctuation itself."""
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            break
        num, name, punct = match.groups()
        start = match.start(match.lastindex) if match.lastindex else pos
        if num is not None:
            tokens.append(("NUM", num, start))
        elif name is not None:
            tokens.append(("NAME", name, start))
        elif punct is not None:
            if punct not in "+-*/^(),":
                raise ParseError(f"unexpected character {punct!r}", start, text)
            tokens.append((punct, punct, start))
        pos = match.end()
    tokens.append(("END", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def current(self) -> Tuple[str, str, int]:
        return self.tokens[self.i]

    def error(self, message: str):
        raise ParseError(message, self.current[2], self.text)

    def accept(self, kind: str) -> bool:
        if self.current[0] == kind:
            self.i += 1
            return True
        return False

    def expect(self, kind: str) -> str:
        if self.current[0] != kind:
            found = self.current[1] or "end of input"
            self.error(f"expected {kind!r}, found {found!r}")
        value = self.current[1]
        self.i += 1
        return value

    def expr(self) -> Expr:
        out = self.term()
        while self.current[0] in ("+", "-"):
            negative = self.current[0] == "-"
            self.i += 1
            t = self.term()
            out = out + (-t if negative else t)
        return out

    def term(self) -> Expr:
        negative = self.accept("-")
        out = self.factor()
        while self.accept("*"):
            out = product(out, self.factor())
        return -out if negative else out

    def factor(self) -> Expr:
        base = self.atom()
        if not self.accept("^"):
            return base
        start = self.current[2]
        power = self.power()
        atom = single_atom(base)
        if atom is not None:
            return atom_expr(atom, power)
        if len(base.terms) == 1 and not base.terms[0].factors:
            if power.denominator != 1:
                raise ParseError("rational power of a number", start, self.text)
            return const(base.terms[0].coef ** int(power))
        if power.denominator != 1 or power < 0:
            raise ParseError("only non-negative integer powers of sums or products", start, self.text)
        out = const(1)
        for _ in range(int(power)):
            out = product(out, base)
        return out

    def power(self) -> Fraction:
        if self.current[0] == "NUM":
            return Fraction(int(self.expect("NUM")))
        self.expect("(")
        negative = self.accept("-")
        value = self.number()
        self.expect(")")
        return -value if negative else value

    def number(self) -> Fraction:
        value = Fraction(int(self.expect("NUM")))
        if self.accept("/"):
            denominator = int(self.expect("NUM"))
            if denominator == 0:
                self.error("division by zero")
            value /= denominator
        return value

    def atom(self) -> Expr:
        kind, value, pos = self.current
        if kind == "NUM":
            return const(self.number())
        if kind == "(":
            self.i += 1
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "NAME":
            self.i += 1
            if self.accept("("):
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                if value not in OPERATORS and not is_delta(value):
                    raise ParseError(f"unknown operator {value!r}", pos, self.text)
                check_operator(value, args)
                return atom_expr(Op(value, tuple(args)))
            if value not in SYMBOLS:
                raise ParseError(f"unknown symbol {value!r}", pos, self.text)
            return atom_expr(SYMBOLS[value])
        self.error(f"unexpected {value or 'end of input'!r}")


def parse_expression(text: str) -> Expr:
    parser = _Parser(text)
    if parser.current[0] == "END":
        raise ParseError("empty expression", 0, text)
    result = parser.expr()
    if parser.current[0] != "END":
        parser.error(f"unexpected {parser.current[1]!r}")
    return result

