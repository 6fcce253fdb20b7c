"""Multiplicative number theory and divisor combinatorics.

Every integer handled here is a divisor of q - 1, q + 1 or q^2 + q + 1
for a prime power q of modest size, so trial division is all the
factoring machinery the package needs.  All arithmetic is exact Python
integers.
"""

from __future__ import annotations

import math
from typing import NamedTuple

__all__ = [
    "DivisorTriple",
    "delta_de",
    "divisors",
    "enumerate_SG",
    "euler_phi",
    "factor_prime_power",
    "factorize",
    "hH_split",
    "is_prime",
    "moebius",
    "padic_valuation",
    "psi",
]


def _check_positive(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"expected a positive integer, got {n!r}")


def factorize(n: int) -> dict[int, int]:
    """Prime factorization {p: exponent} by trial division."""
    _check_positive(n)
    factors: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == {n: 1}


def divisors(n: int) -> list[int]:
    """All positive divisors of n in increasing order."""
    _check_positive(n)
    divs = [1]
    for p, a in factorize(n).items():
        divs = [d * p**k for d in divs for k in range(a + 1)]
    return sorted(divs)


def padic_valuation(n: int, p: int) -> int:
    """Largest v with p^v dividing n."""
    _check_positive(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def euler_phi(n: int) -> int:
    """Number of residues 1 <= k <= n coprime to n."""
    _check_positive(n)
    result = n
    for p in factorize(n):
        result = result // p * (p - 1)
    return result


def moebius(n: int) -> int:
    """0 on non-squarefree n, else (-1)^(number of prime factors)."""
    _check_positive(n)
    factors = factorize(n)
    if any(a > 1 for a in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


def psi(n: int) -> int:
    """Multiplicative function with psi(l^r) = (l - 2) * l^(r - 1).

    psi(1) = 1 (empty product).  Vanishes on every even n > 1 since the
    prime-power value at 2^r is zero.
    """
    _check_positive(n)
    result = 1
    for p, a in factorize(n).items():
        result *= (p - 2) * p ** (a - 1)
    return result


def delta_de(d: int, e: int, q: int) -> int:
    """Parity weight attached to a divisor pair d | q+1, e | q-1.

    Returns 1 for odd d; for even d, 0 or 2 according to whether e
    divides (q - 1)/2 or not.
    """
    if d <= 1 or e <= 1:
        raise ValueError(f"d and e must exceed 1, got d={d}, e={e}")
    if (q + 1) % d != 0:
        raise ValueError(f"d={d} does not divide q+1={q + 1}")
    if (q - 1) % e != 0:
        raise ValueError(f"e={e} does not divide q-1={q - 1}")
    if d % 2 == 1:
        return 1
    # d even forces q odd, so (q - 1)/2 is an integer.
    return 0 if ((q - 1) // 2) % e == 0 else 2


class DivisorTriple(NamedTuple):
    """Triple d >= e >= f > 1 of divisors of q - 1 with equal pairwise lcms."""

    d: int
    e: int
    f: int


def _lcm_condition(d: int, e: int, f: int) -> bool:
    m = math.lcm(d, e)
    return math.lcm(d, f) == m and math.lcm(e, f) == m


def hH_split(d: int, e: int, f: int) -> tuple[int, int]:
    """Split (d*e*f) / lcm(d,e)^2 into h * H by p-adic valuations.

    For each prime l dividing the quotient with exponent a, the full l^a
    goes to H when a equals the valuation of lcm(d,e) at l, and to h
    when a is smaller.  Larger a cannot occur for a triple satisfying
    the lcm condition; it is rejected loudly since the decomposition
    would not be unique.
    """
    for x in (d, e, f):
        if x <= 1:
            raise ValueError(f"triple entries must exceed 1, got {(d, e, f)}")
    if not _lcm_condition(d, e, f):
        raise ValueError(f"{(d, e, f)} violates the equal-lcm condition")
    m = math.lcm(d, e)
    product = d * e * f
    if product % (m * m) != 0:
        raise ValueError(f"lcm(d,e)^2 = {m * m} does not divide d*e*f = {product}")
    rest = product // (m * m)
    h, big_h = 1, 1
    for p, a in factorize(rest).items():
        vm = padic_valuation(m, p)
        if a > vm:
            raise ValueError(
                f"prime {p} has exponent {a} > v_{p}(lcm) = {vm} in {(d, e, f)}"
            )
        if a == vm:
            big_h *= p**a
        else:
            h *= p**a
    return h, big_h


def enumerate_SG(q: int) -> list[DivisorTriple]:
    """All triples d >= e >= f > 1 of divisors of q - 1 with equal pairwise lcms.

    Returned in lexicographic order.  Empty for q = 2.
    """
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    divs = [d for d in divisors(q - 1) if d > 1]
    triples = [
        DivisorTriple(d, e, f)
        for d in divs
        for e in divs
        if e <= d
        for f in divs
        if f <= e and _lcm_condition(d, e, f)
    ]
    return sorted(triples)


def factor_prime_power(q: int) -> tuple[int, int]:
    """Write q = p^e with p prime, or raise ValueError."""
    if not isinstance(q, int) or q < 2:
        raise ValueError(f"q must be an integer >= 2, got {q!r}")
    factors = factorize(q)
    if len(factors) != 1:
        raise ValueError(f"q = {q} is not a prime power")
    ((p, e),) = factors.items()
    return p, e
