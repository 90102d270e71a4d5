"""
Generator images of the three cohomological vector fields.

Q is the BFV operator, Qt the operator on the ψ-variables (ψ_• = χ_• ξⁿ) and
Q0 the horizontal part of Q at the zero section (χ-terms dropped). Images are
written in the expression language and taken verbatim; Q(h) and Q(Π) carry
−L_{ξ∂}. ``Lie(sharp(psiP), xiN)`` denotes (L_{χ∂♯}ξⁿ)ξⁿ.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional

from src.formal.expression import Expr, Op, atom_expr
from src.formal.parser import parse_expression
from src.utils.reliability import ConfigurationError

logger = logging.getLogger(__name__)

_SHARED = {
    "xiN": "Lie(xiP, xiN)",
    "xiP": "xiN*grad(h, xiN) + 1/2*bracket(xiP, xiP)",
    "h": "-2*K*xiN - Lie(xiP, h)",
}

IMAGE_TEXT: Dict[str, Dict[str, str]] = {
    "Q": {
        **_SHARED,
        "Pi": "Pit*xiN + vol*sharp2(G)*xiN + vol*sharp2(Dh(xiN)) - Lie(xiP, Pi)"
              " - sharp2(tens(chiP, d(xiN)))*xiN",
        "chiP": "HP + Lie(xiP, chiP) - chiN*d(xiN)",
        "chiN": "Hn + Lie(xiP, chiN) - 2*Lie(sharp(chiP), xiN*vol^(-1/2))*vol^(1/2)",
    },
    "Qt": {
        **_SHARED,
        "Pi": "Pit*xiN + vol*sharp2(G)*xiN + vol*sharp2(Dh(xiN)) - Lie(xiP, Pi)"
              " + sharp2(tens(psiP, d(xiN)))",
        "psiP": "HP*xiN + Lie(xiP, psiP) - psiN*d(xiN)",
        "psiN": "Hn*xiN + Lie(xiP, psiN) - 2*Lie(sharp(psiP), xiN)",
    },
    "Q0": {
        **_SHARED,
        "Pi": "Pit*xiN + vol*sharp2(G)*xiN + vol*sharp2(Dh(xiN)) - Lie(xiP, Pi)",
        "chiP": "HP",
        "chiN": "Hn",
    },
}


@dataclass(frozen=True)
class QMap:
    """An odd derivation of degree +1 given by its generator images."""
    name: str
    images: Dict[str, Expr] = field(default_factory=dict)

    def image(self, generator: str) -> Optional[Expr]:
        return self.images.get(generator)

    def of(self, e: Expr) -> Expr:
        """The unexpanded application Q(e); ``rules.apply_q`` expands it."""
        return atom_expr(Op(self.name, (e,)))


@lru_cache(maxsize=None)
def define_Q(which: str) -> QMap:
    if which not in IMAGE_TEXT:
        raise ConfigurationError(f"unknown vector field {which!r}; expected one of {sorted(IMAGE_TEXT)}")
    images = {g: parse_expression(text) for g, text in IMAGE_TEXT[which].items()}
    logger.debug(f"{which}: images for {', '.join(sorted(images))}")
    return QMap(which, images)


def image_of(which: str, generator: str) -> Optional[Expr]:
    if which not in IMAGE_TEXT:
        return None
    return define_Q(which).image(generator)
