"""Truncated formal power series with exact rational coefficients.

A :class:`TruncatedSeries` stores coefficients 0..T as `fractions.Fraction`
values; T is the truncation order.  Binary operations require both
operands to share the same truncation order, so precision can never be
lost silently.  Multiplication is the naive O(T^2) Cauchy product, which
is plenty at the orders (a few hundred at most) this package uses.

Series are immutable and hashable-by-identity; all operations return
fresh instances.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import ConsistencyError

Scalar = Union[int, Fraction]

__all__ = ["TruncatedSeries", "geometric", "one", "monomial", "from_coeffs"]


def _as_fraction(value: Scalar) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"exact scalar expected, got {type(value).__name__}")


class TruncatedSeries:
    """A formal power series known exactly up to x^T."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar]):
        self.coeffs: tuple[Fraction, ...] = tuple(_as_fraction(c) for c in coeffs)
        if not self.coeffs:
            raise ValueError("a series needs at least the constant coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, n: int) -> Fraction:
        """Coefficient of x^n.  Asking beyond the truncation order is an error."""
        if n < 0:
            raise ValueError(f"coefficient index must be nonnegative, got {n}")
        if n > self.order:
            raise ValueError(
                f"coefficient {n} beyond truncation order {self.order}"
            )
        return self.coeffs[n]

    def integer_coeffs(self) -> list[int]:
        """All coefficients as ints; raises ConsistencyError on a non-integer."""
        out = []
        for n, c in enumerate(self.coeffs):
            if c.denominator != 1:
                raise ConsistencyError(f"coefficient of x^{n} is non-integral: {c}")
            out.append(c.numerator)
        return out

    def _require_same_order(self, other: "TruncatedSeries") -> None:
        if self.order != other.order:
            raise ValueError(
                f"truncation orders differ: {self.order} vs {other.order}"
            )

    # -- ring operations -------------------------------------------------

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._require_same_order(other)
        return TruncatedSeries(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._require_same_order(other)
        return TruncatedSeries(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(-a for a in self.coeffs)

    def __mul__(self, other: Union["TruncatedSeries", Scalar]) -> "TruncatedSeries":
        if isinstance(other, (int, Fraction)):
            s = _as_fraction(other)
            return TruncatedSeries(a * s for a in self.coeffs)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._require_same_order(other)
        t = self.order
        a, b = self.coeffs, other.coeffs
        out = [Fraction(0)] * (t + 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j in range(t + 1 - i):
                bj = b[j]
                if bj:
                    out[i + j] += ai * bj
        return TruncatedSeries(out)

    __rmul__ = __mul__

    def __truediv__(
        self, other: Union["TruncatedSeries", Scalar]
    ) -> "TruncatedSeries":
        if isinstance(other, (int, Fraction)):
            s = _as_fraction(other)
            if s == 0:
                raise ZeroDivisionError("division of a series by zero")
            return TruncatedSeries(a / s for a in self.coeffs)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._require_same_order(other)
        b0 = other.coeffs[0]
        if b0 == 0:
            raise ZeroDivisionError("divisor series has zero constant term")
        t = self.order
        b = other.coeffs
        out: list[Fraction] = []
        for n in range(t + 1):
            acc = self.coeffs[n]
            for j in range(1, n + 1):
                if b[j]:
                    acc -= b[j] * out[n - j]
            out.append(acc / b0)
        return TruncatedSeries(out)

    def __pow__(self, k: int) -> "TruncatedSeries":
        """Integer power; negative k requires a unit constant term."""
        if not isinstance(k, int):
            raise TypeError("series powers must be integers")
        base = self
        if k < 0:
            if self.coeffs[0] == 0:
                raise ZeroDivisionError(
                    "negative power of a series with zero constant term"
                )
            base = one(self.order) / self
            k = -k
        result = one(self.order)
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- structural operations -------------------------------------------

    def substitute_power(self, d: int) -> "TruncatedSeries":
        """x -> x^d; coefficients pushed beyond the order are dropped."""
        if not isinstance(d, int) or d < 1:
            raise ValueError(f"substitution exponent must be >= 1, got {d}")
        if d == 1:
            return self
        t = self.order
        out = [Fraction(0)] * (t + 1)
        for k in range(t // d + 1):
            out[k * d] = self.coeffs[k]
        return TruncatedSeries(out)

    def exp(self) -> "TruncatedSeries":
        """Formal exponential via (exp a)' = a' exp a; needs zero constant term."""
        if self.coeffs[0] != 0:
            raise ValueError("exp of a series with nonzero constant term")
        t = self.order
        a = self.coeffs
        out = [Fraction(1)]
        for n in range(1, t + 1):
            acc = Fraction(0)
            for j in range(1, n + 1):
                if a[j]:
                    acc += j * a[j] * out[n - j]
            out.append(acc / n)
        return TruncatedSeries(out)

    # -- misc --------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        shown = ", ".join(str(c) for c in self.coeffs[:8])
        tail = ", ..." if self.order >= 8 else ""
        return f"TruncatedSeries([{shown}{tail}], order={self.order})"


def from_coeffs(coeffs: Sequence[Scalar], order: int) -> TruncatedSeries:
    """Series with the given initial coefficients, zero-padded to `order`."""
    if order < 0:
        raise ValueError("truncation order must be nonnegative")
    if len(coeffs) > order + 1:
        raise ValueError("more coefficients than the truncation order allows")
    padded = list(coeffs) + [0] * (order + 1 - len(coeffs))
    return TruncatedSeries(padded)


def one(order: int) -> TruncatedSeries:
    return from_coeffs([1], order)


def monomial(c: Scalar, n: int, order: int) -> TruncatedSeries:
    """The series c * x^n."""
    if n > order:
        return from_coeffs([], order)
    return from_coeffs([0] * n + [c], order)


def geometric(ratio: Scalar, order: int) -> TruncatedSeries:
    """1 / (1 - ratio * x) expanded to the given order."""
    r = _as_fraction(ratio)
    coeffs = [Fraction(1)]
    for _ in range(order):
        coeffs.append(coeffs[-1] * r)
    return TruncatedSeries(coeffs)
