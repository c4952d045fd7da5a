import sympy
from hypothesis import settings

from kgcoord.qring import LaurentInt, RatFunc

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

QS = sympy.Symbol("q")


def to_sympy(p):
    """Independent sympy image of a LaurentInt or RatFunc."""
    if isinstance(p, RatFunc):
        return sympy.together(to_sympy(p.num) / to_sympy(p.den))
    return sum((c * QS**e for e, c in p.terms.items()), sympy.Integer(0))


def laurent(terms: dict) -> LaurentInt:
    return LaurentInt(terms)
