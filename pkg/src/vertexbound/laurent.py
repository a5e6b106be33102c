"""Exact scalars and Laurent polynomials in one formal variable.

Every number in this package is a :class:`fractions.Fraction`; floating
point never enters any computation.  A Laurent polynomial is a finite map
from integer exponents of ``z`` to nonzero rational coefficients, which is
exactly what truncated correlator coefficients and ODE entries need.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .errors import InputShapeError

Q = Fraction

QZERO = Q(0)
QONE = Q(1)


def parse_rational(text: str) -> Q:
    """Parse ``"p/q"`` or ``"p"`` into an exact rational.

    Whitespace around the tokens is ignored.  Anything else, including
    floating-point notation, is rejected: run files must stay exact.
    """
    s = text.strip()
    try:
        if "/" in s:
            num, den = s.split("/")
            return Q(int(num.strip()), int(den.strip()))
        return Q(int(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputShapeError(f"not an exact rational: {text!r}") from exc


def format_rational(value: Q) -> str:
    """Inverse of :func:`parse_rational`; integers print without ``/1``."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@lru_cache(maxsize=None)
def binomial(n: int, k: int) -> int:
    """Binomial coefficient with integer (possibly negative) upper index.

    For ``k < 0`` the value is 0; otherwise it is the falling factorial
    ``n (n-1) ... (n-k+1) / k!``, always an integer.
    """
    if k < 0:
        return 0
    num = 1
    for t in range(k):
        num *= n - t
    den = 1
    for t in range(2, k + 1):
        den *= t
    return num // den


class LaurentPoly:
    """A finite rational linear combination of powers ``z^n``, ``n in Z``.

    Instances behave as immutable values: arithmetic returns new objects
    and zero coefficients are never stored.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        data = {}
        if terms:
            for power, coeff in (terms.items() if isinstance(terms, dict) else terms):
                if not isinstance(power, int):
                    raise InputShapeError(f"exponent must be an integer, got {power!r}")
                c = Q(coeff)
                if c:
                    data[power] = data.get(power, QZERO) + c
                    if not data[power]:
                        del data[power]
        self._terms = data

    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls()

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls({0: QONE})

    @classmethod
    def monomial(cls, power: int, coeff=QONE) -> "LaurentPoly":
        return cls({power: Q(coeff)})

    @property
    def terms(self) -> dict:
        """Exponent-to-coefficient map (a defensive copy)."""
        return dict(self._terms)

    def coeff(self, power: int) -> Q:
        return self._terms.get(power, QZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def min_exponent(self):
        """Smallest exponent with nonzero coefficient, or None if zero."""
        return min(self._terms) if self._terms else None

    def max_exponent(self):
        return max(self._terms) if self._terms else None

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == LaurentPoly({0: Q(other)})
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly({0: Q(other)})
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        out = dict(self._terms)
        for p, c in other._terms.items():
            s = out.get(p, QZERO) + c
            if s:
                out[p] = s
            else:
                out.pop(p, None)
        result = LaurentPoly()
        result._terms = out
        return result

    __radd__ = __add__

    def __neg__(self):
        result = LaurentPoly()
        result._terms = {p: -c for p, c in self._terms.items()}
        return result

    def __sub__(self, other):
        return self + (-other if isinstance(other, LaurentPoly) else LaurentPoly({0: -Q(other)}))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Q(other)
            if not c:
                return LaurentPoly()
            result = LaurentPoly()
            result._terms = {p: c * v for p, v in self._terms.items()}
            return result
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        out = {}
        for p1, c1 in self._terms.items():
            for p2, c2 in other._terms.items():
                p = p1 + p2
                s = out.get(p, QZERO) + c1 * c2
                if s:
                    out[p] = s
                else:
                    out.pop(p, None)
        result = LaurentPoly()
        result._terms = out
        return result

    __rmul__ = __mul__

    def shift(self, power: int) -> "LaurentPoly":
        """Multiply by the monomial ``z^power``."""
        result = LaurentPoly()
        result._terms = {p + power: c for p, c in self._terms.items()}
        return result

    def derivative(self) -> "LaurentPoly":
        """Formal derivative d/dz; the ``z^0`` term is annihilated."""
        out = {}
        for p, c in self._terms.items():
            if p != 0:
                out[p - 1] = c * p
        result = LaurentPoly()
        result._terms = out
        return result

    def __call__(self, value) -> Q:
        """Evaluate at a nonzero exact rational point."""
        x = Q(value)
        if not x and self.min_exponent() is not None and self.min_exponent() < 0:
            raise InputShapeError("cannot evaluate a pole at z = 0")
        total = QZERO
        for p, c in self._terms.items():
            total += c * x ** p
        return total

    def to_json_terms(self) -> list:
        """Sorted term list with rational coefficients split into strings."""
        return [
            {"power": p, "num": str(self._terms[p].numerator), "den": str(self._terms[p].denominator)}
            for p in sorted(self._terms)
        ]

    @classmethod
    def from_json_terms(cls, items) -> "LaurentPoly":
        return cls({int(t["power"]): Q(int(t["num"]), int(t["den"])) for t in items})

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for p in sorted(self._terms):
            c = format_rational(self._terms[p])
            if p == 0:
                parts.append(c)
            elif p == 1:
                parts.append(f"{c}*z")
            else:
                parts.append(f"{c}*z^{p}")
        return " + ".join(parts)


def laurent_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    """Product of two Laurent polynomials."""
    return a * b


def laurent_derivative(a: LaurentPoly) -> LaurentPoly:
    """Formal derivative of a Laurent polynomial."""
    return a.derivative()
