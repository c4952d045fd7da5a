"""Exact coefficient arithmetic in Z[q, q^-1] and Q(q).

Values are immutable. ``LaurentInt`` stores a lowest exponent and a dense
tuple of integer coefficients; ``RatFunc`` is a normalized quotient of two
Laurent polynomials.
"""
from __future__ import annotations

import enum
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Union

from .errors import KgError

__all__ = [
    "LaurentInt",
    "RatFunc",
    "LatticeId",
    "Q",
    "ZERO",
    "ONE",
    "bar",
    "lattice_member",
    "specialize_q1",
    "qint",
    "qfactorial",
    "as_ratfunc",
    "laurent_to_json",
    "laurent_from_json",
]


def _strip(coeffs: list[int], low: int) -> tuple[int, tuple[int, ...]]:
    start = 0
    n = len(coeffs)
    while start < n and coeffs[start] == 0:
        start += 1
    if start == n:
        return 0, ()
    end = n
    while coeffs[end - 1] == 0:
        end -= 1
    return low + start, tuple(coeffs[start:end])


class LaurentInt:
    """An element of Z[q, q^-1]."""

    __slots__ = ("low", "coeffs", "_hash")

    def __init__(self, terms: Mapping[int, int] | None = None):
        terms = {e: c for e, c in (terms or {}).items() if c}
        if not terms:
            self.low, self.coeffs = 0, ()
        else:
            lo, hi = min(terms), max(terms)
            self.low = lo
            self.coeffs = tuple(terms.get(e, 0) for e in range(lo, hi + 1))
        self._hash = None

    @classmethod
    def _raw(cls, low: int, coeffs: tuple[int, ...]) -> "LaurentInt":
        obj = cls.__new__(cls)
        obj.low = low
        obj.coeffs = coeffs
        obj._hash = None
        return obj

    @classmethod
    def from_list(cls, low: int, coeffs: Iterable[int]) -> "LaurentInt":
        lo, c = _strip(list(coeffs), low)
        return cls._raw(lo, c)

    @classmethod
    def const(cls, c: int) -> "LaurentInt":
        return cls._raw(0, (c,)) if c else cls._raw(0, ())

    @classmethod
    def monomial(cls, exp: int, c: int = 1) -> "LaurentInt":
        return cls._raw(exp, (c,)) if c else cls._raw(0, ())

    @property
    def terms(self) -> dict[int, int]:
        return {self.low + k: c for k, c in enumerate(self.coeffs) if c}

    @property
    def high(self) -> int:
        return self.low + len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_one(self) -> bool:
        return self.low == 0 and self.coeffs == (1,)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentInt.const(other)
        if isinstance(other, RatFunc):
            return other == self
        if not isinstance(other, LaurentInt):
            return NotImplemented
        return self.coeffs == other.coeffs and (not self.coeffs or self.low == other.low)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.low if self.coeffs else 0, self.coeffs))
        return self._hash

    def __add__(self, other):
        if isinstance(other, int):
            other = LaurentInt.const(other)
        elif isinstance(other, RatFunc):
            return RatFunc.from_laurent(self) + other
        elif not isinstance(other, LaurentInt):
            return NotImplemented
        if not other.coeffs:
            return self
        if not self.coeffs:
            return other
        lo = min(self.low, other.low)
        hi = max(self.high, other.high)
        out = [0] * (hi - lo + 1)
        off = self.low - lo
        for k, c in enumerate(self.coeffs):
            out[off + k] += c
        off = other.low - lo
        for k, c in enumerate(other.coeffs):
            out[off + k] += c
        return LaurentInt.from_list(lo, out)

    __radd__ = __add__

    def __neg__(self) -> "LaurentInt":
        return LaurentInt._raw(self.low, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, (int, LaurentInt)):
            return self + (-other)
        if isinstance(other, RatFunc):
            return RatFunc.from_laurent(self) - other
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return ZERO_L
            return LaurentInt._raw(self.low, tuple(c * other for c in self.coeffs))
        if isinstance(other, RatFunc):
            return RatFunc.from_laurent(self) * other
        if not isinstance(other, LaurentInt):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return ZERO_L
        if len(a) == 1:
            return LaurentInt._raw(self.low + other.low, tuple(a[0] * c for c in b))
        if len(b) == 1:
            return LaurentInt._raw(self.low + other.low, tuple(b[0] * c for c in a))
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return LaurentInt._raw(self.low + other.low, tuple(out))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentInt":
        if n < 0:
            if len(self.coeffs) == 1 and self.coeffs[0] in (1, -1):
                return LaurentInt._raw(-self.low * (-n), (self.coeffs[0] ** (-n),))
            raise ValueError("negative power of a non-unit Laurent polynomial")
        result = ONE_L
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other):
        return RatFunc.from_laurent(self) / other

    def __rtruediv__(self, other):
        return as_ratfunc(other) / RatFunc.from_laurent(self)

    def bar(self) -> "LaurentInt":
        if not self.coeffs:
            return self
        return LaurentInt._raw(-self.high, tuple(reversed(self.coeffs)))

    def evaluate(self, x):
        """Evaluate at a nonzero number (int or Fraction), exactly."""
        x = Fraction(x)
        return sum((c * x ** (self.low + k) for k, c in enumerate(self.coeffs)), Fraction(0))

    def at_one(self) -> int:
        return sum(self.coeffs)

    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = gcd(g, c)
        return g

    def __repr__(self) -> str:
        return f"LaurentInt({self.terms!r})"

    def __str__(self) -> str:
        return _format_terms(self.terms)


def _format_terms(terms: Mapping[int, int]) -> str:
    if not terms:
        return "0"
    parts = []
    for e in sorted(terms, reverse=True):
        c = terms[e]
        if e == 0:
            mono = str(abs(c))
        else:
            var = "q" if e == 1 else f"q^{e}"
            mono = var if abs(c) == 1 else f"{abs(c)}*{var}"
        sign = "-" if c < 0 else "+"
        parts.append((sign, mono))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, mono in parts[1:]:
        s += f" {sign} {mono}"
    return s


ZERO_L = LaurentInt._raw(0, ())
ONE_L = LaurentInt._raw(0, (1,))


# ---------------------------------------------------------------------------
# dense integer polynomial helpers (ascending coefficient lists, p[0] != 0 not required)

def _trim(p: list[int]) -> list[int]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _content(p: list[int]) -> int:
    g = 0
    for c in p:
        g = gcd(g, c)
    return g


def _primitive(p: list[int]) -> list[int]:
    g = _content(p)
    if g == 0:
        return []
    if p[-1] < 0:
        g = -g
    return [c // g for c in p]


def _prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder of a by b."""
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    while len(a) - 1 >= db and a:
        la = a[-1]
        shift = len(a) - 1 - db
        a = [c * lb for c in a]
        for k, c in enumerate(b):
            a[shift + k] -= la * c
        _trim(a)
    return a


def _poly_gcd(a: list[int], b: list[int]) -> list[int]:
    """Primitive gcd over Z[q] with positive leading coefficient."""
    if not a:
        return _primitive(b)
    if not b:
        return _primitive(a)
    a, b = _primitive(a), _primitive(b)
    if len(a) < len(b):
        a, b = b, a
    while b:
        r = _prem(a, b)
        a, b = b, _primitive(r)
    return _primitive(a)


def _poly_divexact(a: list[int], b: list[int]) -> list[int]:
    """Exact quotient a / b over Z (b divides a)."""
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    out = [0] * max(len(a) - db, 0)
    while a and len(a) - 1 >= db:
        la = a[-1]
        qc, rem = divmod(la, lb)
        if rem:
            raise ArithmeticError("inexact polynomial division")
        shift = len(a) - 1 - db
        out[shift] = qc
        for k, c in enumerate(b):
            a[shift + k] -= qc * c
        _trim(a)
    if a:
        raise ArithmeticError("inexact polynomial division")
    return out


def _poly_divmod_q(a: list[int], b: list[int]):
    """Division over Q: returns (quotient, remainder) as lists of Fractions."""
    a = [Fraction(c) for c in a]
    db = len(b) - 1
    out = [Fraction(0)] * max(len(a) - db, 0)
    while a and len(a) - 1 >= db:
        qc = a[-1] / b[-1]
        shift = len(a) - 1 - db
        out[shift] = qc
        for k, c in enumerate(b):
            a[shift + k] -= qc * c
        while a and a[-1] == 0:
            a.pop()
    return out, a


class RatFunc:
    """An element of Q(q), kept in a canonical reduced form.

    The denominator is a primitive integer polynomial with nonzero constant
    term and positive leading coefficient; numerator and denominator share no
    common factor.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: "LaurentInt | int" = 0, den: "LaurentInt | int" = 1):
        if isinstance(num, int):
            num = LaurentInt.const(num)
        if isinstance(den, int):
            den = LaurentInt.const(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num, self.den = self._normalize(num, den)
        self._hash = None

    @classmethod
    def _raw(cls, num: LaurentInt, den: LaurentInt) -> "RatFunc":
        obj = cls.__new__(cls)
        obj.num = num
        obj.den = den
        obj._hash = None
        return obj

    @classmethod
    def from_laurent(cls, p: LaurentInt) -> "RatFunc":
        return cls._raw(p, ONE_L)

    @staticmethod
    def _normalize(num: LaurentInt, den: LaurentInt):
        if num.is_zero():
            return ZERO_L, ONE_L
        if den.is_one():
            return num, den
        # move the monomial part of den into num
        shift = num.low - den.low
        n = list(num.coeffs)
        d = list(den.coeffs)
        if len(d) > 1:
            g = _poly_gcd(n, d)
            if len(g) > 1:
                n = _poly_divexact(n, g)
                d = _poly_divexact(d, g)
        c = gcd(_content(n), _content(d))
        if d[-1] < 0:
            c = -c
        if c != 1:
            n = [x // c for x in n]
            d = [x // c for x in d]
        return LaurentInt.from_list(shift, n), LaurentInt.from_list(0, d)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_laurent(self) -> bool:
        return self.den.is_one()

    def to_laurent(self) -> LaurentInt:
        if not self.den.is_one():
            raise ValueError(f"{self} is not a Laurent polynomial")
        return self.num

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, LaurentInt)):
            other = as_ratfunc(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __add__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, (int, LaurentInt)):
                other = as_ratfunc(other)
            else:
                return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        if self.den.is_one() and other.den.is_one():
            return RatFunc._raw(self.num + other.num, ONE_L)
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFunc":
        return RatFunc._raw(-self.num, self.den)

    def __sub__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, (int, LaurentInt)):
                other = as_ratfunc(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return as_ratfunc(other) - self

    def __mul__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, (int, LaurentInt)):
                other = as_ratfunc(other)
            else:
                return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return ZERO
        if self.den.is_one() and other.den.is_one():
            return RatFunc._raw(self.num * other.num, ONE_L)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        other = as_ratfunc(other)
        if other.num.is_zero():
            raise ZeroDivisionError("division by zero")
        if other.den.is_one() and len(other.num.coeffs) == 1 and other.num.coeffs[0] in (1, -1):
            s = other.num.coeffs[0]
            return RatFunc._raw(
                LaurentInt._raw(self.num.low - other.num.low, tuple(s * c for c in self.num.coeffs))
                if self.num.coeffs else ZERO_L,
                self.den,
            )
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return as_ratfunc(other) / self

    def __pow__(self, n: int) -> "RatFunc":
        if n < 0:
            return self.inverse() ** (-n)
        return RatFunc(self.num ** n, self.den ** n)

    def bar(self) -> "RatFunc":
        if self.den.is_one():
            return RatFunc._raw(self.num.bar(), ONE_L)
        return RatFunc(self.num.bar(), self.den.bar())

    def evaluate(self, x) -> Fraction:
        return self.num.evaluate(x) / self.den.evaluate(x)

    def degree(self) -> int:
        """Order of growth at q = infinity: deg(num) - deg(den)."""
        if self.num.is_zero():
            raise ValueError("degree of zero")
        return self.num.high - self.den.high

    def leading_coefficient(self) -> Fraction:
        return Fraction(self.num.coeffs[-1], self.den.coeffs[-1])

    def expand_at_infinity(self, nterms: int) -> dict[int, Fraction]:
        """First ``nterms`` coefficients of the expansion in descending powers of q."""
        if self.num.is_zero():
            return {}
        rem = {e: Fraction(c) for e, c in self.num.terms.items()}
        dterms = self.den.terms
        dhi = self.den.high
        lead = Fraction(dterms[dhi])
        out: dict[int, Fraction] = {}
        e = self.num.high
        for _ in range(nterms):
            c = rem.pop(e, Fraction(0))
            k = e - dhi
            if c:
                qc = c / lead
                out[k] = qc
                for de, dc in dterms.items():
                    if de != dhi:
                        rem[k + de] = rem.get(k + de, Fraction(0)) - qc * dc
            e -= 1
        return out

    def __repr__(self) -> str:
        if self.den.is_one():
            return f"RatFunc({self.num})"
        return f"RatFunc(({self.num})/({self.den}))"

    def __str__(self) -> str:
        if self.den.is_one():
            return str(self.num)
        return f"({self.num})/({self.den})"


ZERO = RatFunc._raw(ZERO_L, ONE_L)
ONE = RatFunc._raw(ONE_L, ONE_L)
Q = RatFunc._raw(LaurentInt._raw(1, (1,)), ONE_L)

Scalar = Union[int, LaurentInt, RatFunc]


def as_ratfunc(x: Scalar) -> RatFunc:
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, LaurentInt):
        return RatFunc._raw(x, ONE_L)
    if isinstance(x, int):
        return RatFunc._raw(LaurentInt.const(x), ONE_L)
    raise TypeError(f"cannot coerce {type(x).__name__} to RatFunc")


def qpow(n: int) -> RatFunc:
    return RatFunc._raw(LaurentInt._raw(n, (1,)), ONE_L)


def qint(n: int, d: int = 1) -> RatFunc:
    """Quantum integer [n] in the variable q^d."""
    if n == 0:
        return ZERO
    sign = 1 if n > 0 else -1
    m = abs(n)
    # [m]_{q^d} = q^{d(m-1)} + q^{d(m-3)} + ... + q^{-d(m-1)}
    terms = {d * (m - 1 - 2 * k): 1 for k in range(m)}
    return RatFunc._raw(LaurentInt(terms) * sign, ONE_L)


def qfactorial(n: int, d: int = 1) -> RatFunc:
    out = ONE
    for k in range(1, n + 1):
        out = out * qint(k, d)
    return out


def qbinomial(n: int, k: int, d: int = 1) -> RatFunc:
    """Quantum binomial [n choose k] in q^d (n may be negative)."""
    if k < 0:
        return ZERO
    num = ONE
    for s in range(k):
        num = num * qint(n - s, d)
    return num / qfactorial(k, d)


class LatticeId(enum.Enum):
    INT_LAURENT = "Z[q,q^-1]"
    Q_NEG = "q^-1 Z[q^-1]"
    A_INFINITY = "A_inf"


def bar(p: Scalar) -> RatFunc:
    """The ring involution q -> q^-1."""
    return as_ratfunc(p).bar()


def lattice_member(p: Scalar, lattice: LatticeId) -> bool:
    p = as_ratfunc(p)
    if lattice is LatticeId.INT_LAURENT:
        return p.den.is_one()
    if lattice is LatticeId.Q_NEG:
        return p.den.is_one() and (p.num.is_zero() or p.num.high <= -1)
    if lattice is LatticeId.A_INFINITY:
        return p.num.is_zero() or p.num.high <= p.den.high
    raise ValueError(lattice)


def in_qinv_Ainf(p: Scalar) -> bool:
    """Membership in q^-1 times the ring of functions regular at infinity."""
    p = as_ratfunc(p)
    return p.num.is_zero() or p.num.high < p.den.high


def in_Zqinv(p: Scalar) -> bool:
    """Membership in Z[q^-1]."""
    p = as_ratfunc(p)
    return p.den.is_one() and (p.num.is_zero() or p.num.high <= 0)


def specialize_q1(p: Scalar) -> int:
    """Image under q -> 1; only defined on Z[q, q^-1]."""
    if isinstance(p, int):
        return p
    if isinstance(p, RatFunc):
        if not p.den.is_one():
            raise KgError("NOT_LAURENT", f"{p} has a nontrivial denominator")
        p = p.num
    return p.at_one()


def laurent_to_json(p: Scalar) -> dict[str, int]:
    p = as_ratfunc(p)
    if not p.den.is_one():
        raise KgError("NOT_LAURENT", f"{p} has a nontrivial denominator")
    return {str(e): c for e, c in sorted(p.num.terms.items())}


def laurent_from_json(obj: Mapping[str, int]) -> LaurentInt:
    return LaurentInt({int(e): int(c) for e, c in obj.items()})


def ratfunc_to_json(p: Scalar):
    p = as_ratfunc(p)
    if p.den.is_one():
        return laurent_to_json(p)
    return {"num": laurent_to_json(RatFunc._raw(p.num, ONE_L)),
            "den": laurent_to_json(RatFunc._raw(p.den, ONE_L))}
