"""Catalog of locally closed subvarieties of P^1, P^2 and A^N.

Each stratum knows its exact point count N_r over F_{q^r} for every
r >= 1.  From those counts the module derives, in exact arithmetic:

* ``orbit_counts``   -- the numbers b_r of Frobenius orbits of length r,
* ``f_series``       -- the generating function of rational n-set counts,
  computed as Z(x)/Z(x^2) with Z the zeta series exp(sum N_r x^r / r),
* ``fbar_series``    -- the n-multiset analogue, Z(x) itself,
* ``closed_coeff``   -- the published closed-form value of the n-set
  count, with every small-n and congruence branch spelled out,
* ``proj_coeff_general`` -- the closed form for projective space of any
  dimension N, valid for n > N + 1.

The catalog is a closed enumeration: these are exactly the strata the
counting formulas of :mod:`pglorbits.counting` consume, and closed forms
exist only for them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import numtheory, series
from .errors import ConsistencyError
from .series import TruncatedSeries

__all__ = [
    "Stratum",
    "affine",
    "affine_minus_point",
    "proj",
    "catalog",
    "catalog_names",
    "get_stratum",
    "point_count",
    "orbit_counts",
    "zeta_series",
    "f_series",
    "fbar_series",
    "closed_coeff",
    "proj_coeff_general",
    "AFFINE2_MINUS_LINE",
    "AFFINE2_MINUS_TWO_LINES",
    "PROJ1_MINUS_DEG2_ORBIT",
    "PROJ2_MINUS_POINT",
    "PROJ2_MINUS_DEG3_ORBIT",
    "PROJ2_MINUS_THREE_RATIONAL_POINTS",
    "PROJ2_MINUS_POINT_AND_DEG2_ORBIT",
]


@dataclass(frozen=True)
class Stratum:
    """A named stratum; `dim` parametrizes the affine/projective families."""

    name: str
    family: str
    dim: int = 0


def affine(n: int) -> Stratum:
    if n < 1:
        raise ValueError("affine dimension must be >= 1")
    return Stratum(f"affine{n}", "affine", n)


def affine_minus_point(n: int) -> Stratum:
    if n < 1:
        raise ValueError("affine dimension must be >= 1")
    return Stratum(f"affine{n}_minus_point", "affine_minus_point", n)


def proj(n: int) -> Stratum:
    if n < 1:
        raise ValueError("projective dimension must be >= 1")
    return Stratum(f"proj{n}", "proj", n)


AFFINE2_MINUS_LINE = Stratum("affine2_minus_line", "affine2_minus_line", 2)
AFFINE2_MINUS_TWO_LINES = Stratum(
    "affine2_minus_two_lines", "affine2_minus_two_lines", 2
)
PROJ1_MINUS_DEG2_ORBIT = Stratum(
    "proj1_minus_deg2_orbit", "proj1_minus_deg2_orbit", 1
)
PROJ2_MINUS_POINT = Stratum("proj2_minus_point", "proj2_minus_point", 2)
PROJ2_MINUS_DEG3_ORBIT = Stratum(
    "proj2_minus_deg3_orbit", "proj2_minus_deg3_orbit", 2
)
PROJ2_MINUS_THREE_RATIONAL_POINTS = Stratum(
    "proj2_minus_three_rational_points", "proj2_minus_three_rational_points", 2
)
PROJ2_MINUS_POINT_AND_DEG2_ORBIT = Stratum(
    "proj2_minus_point_and_deg2_orbit", "proj2_minus_point_and_deg2_orbit", 2
)


def catalog() -> list[Stratum]:
    """The named strata the CLI exposes (dimension-1/2 instances)."""
    return [
        affine(1),
        affine(2),
        affine_minus_point(1),
        affine_minus_point(2),
        AFFINE2_MINUS_LINE,
        AFFINE2_MINUS_TWO_LINES,
        proj(1),
        proj(2),
        PROJ1_MINUS_DEG2_ORBIT,
        PROJ2_MINUS_POINT,
        PROJ2_MINUS_DEG3_ORBIT,
        PROJ2_MINUS_THREE_RATIONAL_POINTS,
        PROJ2_MINUS_POINT_AND_DEG2_ORBIT,
    ]


def catalog_names() -> list[str]:
    return [s.name for s in catalog()]


def get_stratum(name: str) -> Stratum:
    """Resolve a stratum name, including affineN / projN for any N >= 1."""
    for s in catalog():
        if s.name == name:
            return s
    for prefix, builder in (
        ("affine", affine),
        ("proj", proj),
    ):
        if name.startswith(prefix):
            rest = name[len(prefix):]
            if rest.endswith("_minus_point") and prefix == "affine":
                digits = rest[: -len("_minus_point")]
                if digits.isdigit() and int(digits) >= 1:
                    return affine_minus_point(int(digits))
            if rest.isdigit() and int(rest) >= 1:
                return builder(int(rest))
    raise KeyError(name)


# -- point counts ----------------------------------------------------------


def _proj_points(n: int, size: int) -> int:
    """Number of points of P^n over a field with `size` elements."""
    return (size ** (n + 1) - 1) // (size - 1)


def point_count(s: Stratum, q: int, r: int) -> int:
    """|V(F_{q^r})| for the stratum V."""
    if r < 1:
        raise ValueError(f"level r must be >= 1, got {r}")
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    qr = q**r
    fam = s.family
    if fam == "affine":
        return qr**s.dim
    if fam == "affine_minus_point":
        return qr**s.dim - 1
    if fam == "affine2_minus_line":
        return qr**2 - qr
    if fam == "affine2_minus_two_lines":
        return qr**2 - 2 * qr + 1
    if fam == "proj":
        return _proj_points(s.dim, qr)
    if fam == "proj1_minus_deg2_orbit":
        return qr + 1 - (2 if r % 2 == 0 else 0)
    if fam == "proj2_minus_point":
        return _proj_points(2, qr) - 1
    if fam == "proj2_minus_deg3_orbit":
        return _proj_points(2, qr) - (3 if r % 3 == 0 else 0)
    if fam == "proj2_minus_three_rational_points":
        return _proj_points(2, qr) - 3
    if fam == "proj2_minus_point_and_deg2_orbit":
        return _proj_points(2, qr) - 1 - (2 if r % 2 == 0 else 0)
    raise ValueError(f"unknown stratum family {fam!r}")


def orbit_counts(s: Stratum, q: int, rmax: int) -> tuple[int, ...]:
    """(b_1, ..., b_rmax): numbers of Frobenius orbits of each length.

    Moebius inversion of N_r = sum_{d | r} d * b_d.  Non-integral or
    negative values would mean a broken point-count rule and raise.
    """
    if rmax < 1:
        raise ValueError(f"rmax must be >= 1, got {rmax}")
    counts = {r: point_count(s, q, r) for r in range(1, rmax + 1)}
    out = []
    for r in range(1, rmax + 1):
        total = sum(numtheory.moebius(d) * counts[r // d] for d in numtheory.divisors(r))
        if total % r != 0 or total < 0:
            raise ConsistencyError(
                f"orbit count b_{r} of {s.name} at q={q} is not a nonnegative "
                f"integer (Moebius sum {total})"
            )
        out.append(total // r)
    return tuple(out)


# -- generating functions --------------------------------------------------


@lru_cache(maxsize=None)
def zeta_series(s: Stratum, q: int, order: int) -> TruncatedSeries:
    """exp(sum_{r>=1} N_r x^r / r) truncated at the given order."""
    log_coeffs = [Fraction(0)]
    for r in range(1, order + 1):
        log_coeffs.append(Fraction(point_count(s, q, r), r))
    return TruncatedSeries(log_coeffs).exp()


@lru_cache(maxsize=None)
def f_series(s: Stratum, q: int, order: int) -> TruncatedSeries:
    """Generating function of rational n-set counts: Z(x)/Z(x^2)."""
    z = zeta_series(s, q, order)
    f = z / z.substitute_power(2)
    ints = f.integer_coeffs()
    if any(c < 0 for c in ints):
        raise ConsistencyError(f"negative n-set count for {s.name} at q={q}")
    return f


@lru_cache(maxsize=None)
def fbar_series(s: Stratum, q: int, order: int) -> TruncatedSeries:
    """Generating function of rational n-multiset counts: Z(x)."""
    z = zeta_series(s, q, order)
    ints = z.integer_coeffs()
    if any(c < 0 for c in ints):
        raise ConsistencyError(f"negative n-multiset count for {s.name} at q={q}")
    return z


# -- closed forms ----------------------------------------------------------


def _as_int(x: Fraction, context: str) -> int:
    if x.denominator != 1:
        raise ConsistencyError(f"{context} evaluated to non-integer {x}")
    return x.numerator


def closed_coeff(s: Stratum, q: int, n: int) -> int:
    """The n-set count a_V(n) from the published case-split formulas."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0:
        return 1
    fam, N = s.family, s.dim
    F = Fraction

    if fam == "affine":
        return q ** (n * N) if n <= 1 else q ** (n * N) - q ** ((n - 1) * N)

    if fam == "affine_minus_point":
        qn = q**N
        return _as_int(
            F((qn - 1) * (q ** (n * N) - (-1) ** n), qn + 1), f"{s.name}({q},{n})"
        )

    if fam == "affine2_minus_line":
        if n % 2 == 0:
            val = F(q**2 - 1, q**2 + q + 1) * (q ** (2 * n) - q ** (n // 2))
        else:
            val = F(q - 1, q**2 + q + 1) * (
                (q + 1) * q ** (2 * n) + q ** ((n + 1) // 2)
            )
        return _as_int(val, f"{s.name}({q},{n})")

    if fam == "affine2_minus_two_lines":
        lead = F(q**4 - 1, (q**2 + q + 1) ** 2)
        if n % 2 == 0:
            inner = q ** (2 * n) - q ** (n // 2) * (
                F(n, 2) * F((q**3 - 1) * (q - 1), q**4 - 1) + 1
            )
        else:
            # The odd-n formula below is stated for n > 1 but also evaluates
            # to the rational point count (q - 1)^2 at n = 1.
            inner = q ** (2 * n) + q ** ((n - 1) // 2) * (
                F(n - 1, 2) * F(q**3 - 1, q**2 + 1)
                - F((q - 1) * (2 * q**2 + q + 1), q**4 - 1)
            )
        return _as_int(lead * inner, f"{s.name}({q},{n})")

    if fam == "proj":
        if N == 1:
            if n == 1:
                return q + 1
            if n == 2:
                return q**2
            return q**n - q ** (n - 2)
        if N == 2:
            if n == 1:
                return q**2 + q + 1
            if n == 2:
                return q**4 + q**3 + q**2
            if n == 3:
                return q**6 + q**5 + q**4 - q**2 - q
            return (q**6 + q**5 + q**4 - q**2 - q - 1) * q ** (2 * n - 6)
        raise ValueError(
            f"no all-n closed form for proj{N}; use proj_coeff_general for n > N+1"
        )

    if fam == "proj1_minus_deg2_orbit":
        if n % 2 == 1:
            val = F(q + 1, q**2 + 1) * (
                (q - 1) * q**n + (-1) ** ((n - 1) // 2) * (q + 1)
            )
        else:
            val = F(q**2 - 1, q**2 + 1) * (q**n - (-1) ** (n // 2))
        return _as_int(val, f"{s.name}({q},{n})")

    if fam == "proj2_minus_point":
        if n == 1:
            return q**2 + q
        if n == 2:
            return q**4 + q**3 - q
        return (q**4 + q**3 - q - 1) * q ** (2 * n - 4)

    if fam == "proj2_minus_deg3_orbit":
        if n % 3 == 1:
            val = F(q**2 + q + 1, q**4 - q**2 + 1) * (
                (q**2 - 1) * q ** (2 * n) + (-1) ** ((n - 1) // 3)
            )
        elif n % 3 == 2:
            val = F(q**2 + q + 1, q**4 - q**2 + 1) * (
                (q**2 - 1) * q ** (2 * n) + (-1) ** ((n - 2) // 3) * q**2
            )
        else:
            val = F((q**3 - 1) * (q + 1), q**4 - q**2 + 1) * (
                q ** (2 * n) - (-1) ** (n // 3)
            )
        return _as_int(val, f"{s.name}({q},{n})")

    if fam == "proj2_minus_three_rational_points":
        val = F(q - 1, (q**2 + 1) ** 2) * (
            (q**3 + 2 * q**2 + 2 * q + 1) * q ** (2 * n)
            + (-1) ** n
            * ((n - 1) * q**3 - (n + 2) * q**2 + (n - 2) * q - (n + 1))
        )
        return _as_int(val, f"{s.name}({q},{n})")

    if fam == "proj2_minus_point_and_deg2_orbit":
        if n % 2 == 1:
            val = F(q + 1, q**4 + 1) * (
                (q**3 - 1) * q ** (2 * n)
                + (-1) ** ((n - 1) // 2) * q * (q + 1)
            )
        else:
            val = F((q**3 - 1) * (q + 1), q**4 + 1) * (
                q ** (2 * n) - (-1) ** (n // 2)
            )
        return _as_int(val, f"{s.name}({q},{n})")

    raise ValueError(f"unknown stratum family {fam!r}")


def proj_coeff_general(N: int, q: int, n: int) -> int:
    """n-set count of P^N for n > N + 1, any dimension N >= 1.

    Evaluates sum over N/2 < i <= N of

        (-1)^(N-i) L(2i) / (L(2i-N-1) L(i) L(N-i)) * q^(in - (N-i)(N-i+1)/2)

    with L(r) = (1 - 1/q)(1 - 1/q^2)...(1 - 1/q^r) and L(0) = 1, in exact
    rational arithmetic, asserting the result is a nonnegative integer.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if n <= N + 1:
        raise ValueError(f"formula requires n > N + 1, got n={n}, N={N}")

    @lru_cache(maxsize=None)
    def lam(r: int) -> Fraction:
        out = Fraction(1)
        for j in range(1, r + 1):
            out *= 1 - Fraction(1, q**j)
        return out

    total = Fraction(0)
    for i in range(N // 2 + 1, N + 1):
        coeff = Fraction((-1) ** (N - i)) * lam(2 * i) / (
            lam(2 * i - N - 1) * lam(i) * lam(N - i)
        )
        total += coeff * q ** (i * n - (N - i) * (N - i + 1) // 2)
    value = _as_int(total, f"proj{N} coefficient ({q},{n})")
    if value < 0:
        raise ConsistencyError(f"negative projective n-set count {value}")
    return value
