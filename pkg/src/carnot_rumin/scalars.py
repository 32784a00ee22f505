"""Exact scalars.

Plain rationals are ``gmpy2.mpq``.  ``Surd`` is the presentation-only
extension ``q * sqrt(r)`` used to display orthonormal-basis matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2

Q = gmpy2.mpq
ZERO = Q(0)
ONE = Q(1)


def to_q(value) -> gmpy2.mpq:
    """Coerce ints, Fractions, mpq, sympy Rationals or "num/den" strings."""
    if isinstance(value, str):
        value = value.strip()
        if "/" in value:
            num, den = value.split("/")
            return Q(int(num), int(den))
        return Q(Fraction(value))
    if hasattr(value, "p") and hasattr(value, "q"):  # sympy Rational
        return Q(int(value.p), int(value.q))
    if isinstance(value, float):
        raise TypeError("floats are not exact scalars")
    return Q(value)


def q_str(value) -> str:
    value = Q(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = a**2 * b with b squarefree; returns (a, b)."""
    a, b = 1, 1
    f = 2
    while f * f <= n:
        while n % (f * f) == 0:
            a *= f
            n //= f * f
        if n % f == 0:
            b *= f
            n //= f
        f += 1
    return a, b * n


class RadicandMismatch(ArithmeticError):
    pass


@dataclass(frozen=True)
class Surd:
    """The real number ``coeff * sqrt(radicand)``, radicand a squarefree positive int."""

    coeff: gmpy2.mpq
    radicand: int = 1

    @classmethod
    def sqrt(cls, value) -> "Surd":
        """Exact square root of a nonnegative rational."""
        value = to_q(value)
        if value < 0:
            raise ValueError("negative radicand")
        if value == 0:
            return cls(ZERO, 1)
        # sqrt(n/d) = sqrt(n*d)/d
        a, b = _squarefree_split(int(value.numerator) * int(value.denominator))
        return cls(Q(a, int(value.denominator)), b)

    def __post_init__(self):
        object.__setattr__(self, "coeff", to_q(self.coeff))
        if self.radicand <= 0:
            raise ValueError("radicand must be positive")
        if self.coeff == 0:
            object.__setattr__(self, "radicand", 1)

    def __mul__(self, other):
        if not isinstance(other, Surd):
            return Surd(self.coeff * to_q(other), self.radicand)
        a, b = _squarefree_split(self.radicand * other.radicand)
        return Surd(self.coeff * other.coeff * a, b)

    __rmul__ = __mul__

    def __add__(self, other: "Surd") -> "Surd":
        if self.coeff == 0:
            return other
        if other.coeff == 0:
            return self
        if self.radicand != other.radicand:
            raise RadicandMismatch(
                f"cannot add q*sqrt({self.radicand}) and q*sqrt({other.radicand})"
            )
        return Surd(self.coeff + other.coeff, self.radicand)

    def __neg__(self):
        return Surd(-self.coeff, self.radicand)

    def __sub__(self, other):
        return self + (-other)

    def inverse(self) -> "Surd":
        # 1/(q sqrt r) = sqrt(r) / (q r)
        if self.coeff == 0:
            raise ZeroDivisionError
        return Surd(1 / (self.coeff * self.radicand), self.radicand)

    def is_rational(self) -> bool:
        return self.radicand == 1

    def __float__(self):
        return float(self.coeff) * self.radicand ** 0.5

    def to_sympy(self):
        import sympy

        return sympy.Rational(int(self.coeff.numerator), int(self.coeff.denominator)) * sympy.sqrt(
            self.radicand
        )

    def __str__(self):
        if self.radicand == 1:
            return q_str(self.coeff)
        if self.coeff == 1:
            return f"sqrt({self.radicand})"
        return f"{q_str(self.coeff)}*sqrt({self.radicand})"

    def latex(self) -> str:
        c = self.coeff
        if self.radicand == 1:
            return _latex_q(c)
        root = rf"\sqrt{{{self.radicand}}}"
        if c == 1:
            return root
        if c == -1:
            return "-" + root
        if c.numerator == 1:
            return rf"\frac{{{root}}}{{{c.denominator}}}"
        if c.numerator == -1:
            return rf"-\frac{{{root}}}{{{c.denominator}}}"
        return _latex_q(c) + root


def _latex_q(c) -> str:
    c = Q(c)
    if c.denominator == 1:
        return str(c.numerator)
    sign = "-" if c < 0 else ""
    return rf"{sign}\frac{{{abs(c.numerator)}}}{{{c.denominator}}}"
