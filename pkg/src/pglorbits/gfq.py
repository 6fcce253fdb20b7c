"""Finite field towers F_{q^r} for prime powers q = p^e.

A tower level is the quotient ring F_p[x]/(m) for an irreducible monic
modulus m of degree e*r, so the field has p^(e*r) = q^r elements.  The
modulus is the lexicographically smallest monic irreducible polynomial
of that degree (coefficients compared low degree first), which makes
every serialized element stable across runs.

Elements are plain tuples of ints in [0, p), length e*r, coefficients in
ascending degree.  They are value objects: equality and hashing are
coordinate-wise.  The q-Frobenius x -> x^q generates the Galois group of
the level-r field over the base F_q; elements fixed by it form the
canonical copy of F_q.

Field sizes are capped by the ORBITAL_MAX_FIELD_BITS environment
variable (default 26, i.e. at most 2^26 elements); constructions beyond
the cap raise BudgetExceededError.
"""

from __future__ import annotations

import itertools
import math
import os
from functools import lru_cache

import numpy as np

from . import fplinalg, numtheory
from .errors import BudgetExceededError, ConsistencyError

Element = tuple[int, ...]

MAX_FIELD_BITS_ENV = "ORBITAL_MAX_FIELD_BITS"
DEFAULT_MAX_FIELD_BITS = 26

__all__ = [
    "Element",
    "FieldTower",
    "base_field_elements",
    "frobenius_q",
    "make_tower",
    "max_field_bits",
]


def max_field_bits() -> int:
    raw = os.environ.get(MAX_FIELD_BITS_ENV)
    if raw is None:
        return DEFAULT_MAX_FIELD_BITS
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{MAX_FIELD_BITS_ENV} must be an integer, got {raw!r}") from exc


# -- polynomial helpers over F_p (dense int lists, ascending degree) -------


def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_divmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    a = a[:]
    db, lead = len(b) - 1, b[-1]
    inv_lead = pow(lead, -1, p)
    quo = [0] * max(len(a) - db, 0)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] % p
        if c:
            factor = (c * inv_lead) % p
            quo[i - db] = factor
            for j, bj in enumerate(b):
                a[i - db + j] = (a[i - db + j] - factor * bj) % p
    return quo, _poly_trim([c % p for c in a[:db]])


def _poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a = _poly_trim([c % p for c in a])
    b = _poly_trim([c % p for c in b])
    while b:
        _, rem = _poly_divmod(a, b, p)
        a, b = b, rem
    return a


def _poly_deriv(a: list[int], p: int) -> list[int]:
    return _poly_trim([(i * c) % p for i, c in enumerate(a)][1:])


def _eval_poly(a: list[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(a):
        acc = (acc * x + c) % p
    return acc


def _frobenius_ring_matrix(f: list[int], p: int) -> np.ndarray:
    """Matrix of y -> y^p on F_p[x]/(f) in the monomial basis (columns)."""
    deg = len(f) - 1
    red = _reduction_matrix(tuple(f), p)
    # g = x^p mod f
    g = [0] * (deg + 1)
    if p < deg:
        g[p] = 1
        g = _poly_trim(g[:deg])
    else:
        full = [0] * (p + 1)
        full[p] = 1
        _, g = _poly_divmod(full, f, p)
    gv = np.zeros(deg, dtype=np.int64)
    gv[: len(g)] = g
    cols = np.zeros((deg, deg), dtype=np.int64)
    col = np.zeros(deg, dtype=np.int64)
    col[0] = 1
    cols[:, 0] = col
    for j in range(1, deg):
        conv = np.convolve(col, gv)
        col = (red[:, : conv.size] @ conv) % p
        cols[:, j] = col
    return cols


@lru_cache(maxsize=None)
def _reduction_matrix(f: tuple[int, ...], p: int) -> np.ndarray:
    """Maps coefficient vectors of degree < 2*deg-1 to their class mod f."""
    deg = len(f) - 1
    mat = np.zeros((deg, 2 * deg - 1), dtype=np.int64)
    col = np.zeros(deg, dtype=np.int64)
    col[0] = 1
    mat[:, 0] = col
    tail = np.array(f[:deg], dtype=np.int64)
    for k in range(1, 2 * deg - 1):
        top = col[deg - 1]
        col = np.roll(col, 1)
        col[0] = 0
        if top:
            col = (col - top * tail) % p
        mat[:, k] = col
    return mat


def _is_irreducible(f: list[int], p: int) -> bool:
    """Squarefree test plus Berlekamp: one distinct irreducible factor."""
    deg = len(f) - 1
    if deg == 1:
        return True
    if f[0] == 0:
        return False
    if any(_eval_poly(f, c, p) == 0 for c in range(p)):
        return False
    if len(_poly_gcd(f, _poly_deriv(f, p), p)) != 1:
        return False
    frob = _frobenius_ring_matrix(f, p)
    nullity = frob.shape[0] - fplinalg.rank(frob - np.eye(deg, dtype=np.int64), p)
    return nullity == 1


def _find_modulus(p: int, deg: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of the given degree."""
    if deg == 1:
        return (0, 1)
    for a0 in range(1, p):
        for rest in itertools.product(range(p), repeat=deg - 1):
            f = [a0, *rest, 1]
            if _is_irreducible(f, p):
                return tuple(f)
    raise ConsistencyError(f"no irreducible polynomial of degree {deg} over F_{p}")


# -- the tower itself -------------------------------------------------------


class FieldTower:
    """The field F_{q^r} with q = p^e, as F_p[x] modulo an irreducible."""

    def __init__(self, p: int, e: int, r: int, modulus: tuple[int, ...]):
        self.p = p
        self.e = e
        self.r = r
        self.deg = e * r
        self.modulus = modulus
        if len(modulus) != self.deg + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree e*r")
        self.q = p**e
        self.size = p**self.deg
        self.zero: Element = (0,) * self.deg
        self.one: Element = (1,) + (0,) * (self.deg - 1)

    def __repr__(self) -> str:
        return f"FieldTower(p={self.p}, e={self.e}, r={self.r})"

    # -- element arithmetic ------------------------------------------------

    def from_int(self, c: int) -> Element:
        return (c % self.p,) + (0,) * (self.deg - 1)

    def add(self, a: Element, b: Element) -> Element:
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a: Element, b: Element) -> Element:
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a: Element) -> Element:
        p = self.p
        return tuple((-x) % p for x in a)

    def mul(self, a: Element, b: Element) -> Element:
        p, deg = self.p, self.deg
        conv = [0] * (2 * deg - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        conv[i + j] += ai * bj
        tail = self.modulus[:deg]
        for k in range(2 * deg - 2, deg - 1, -1):
            c = conv[k] % p
            if c:
                base = k - deg
                for j, tj in enumerate(tail):
                    if tj:
                        conv[base + j] -= c * tj
        return tuple(c % p for c in conv[:deg])

    def inv(self, a: Element) -> Element:
        """Inverse by extended Euclid; raises ZeroDivisionError on zero."""
        p = self.p
        r0, r1 = list(self.modulus), _poly_trim([c % p for c in a])
        if not r1:
            raise ZeroDivisionError("inverse of zero field element")
        s0, s1 = [], [1]
        while r1:
            quo, rem = _poly_divmod(r0, r1, p)
            r0, r1 = r1, rem
            prod = [0] * (len(quo) + len(s1) - 1) if s1 else []
            for i, qi in enumerate(quo):
                if qi:
                    for j, sj in enumerate(s1):
                        prod[i + j] = (prod[i + j] + qi * sj) % p
            new_s = [(x - y) % p for x, y in itertools.zip_longest(s0, prod, fillvalue=0)]
            s0, s1 = s1, _poly_trim(new_s)
        # r0 is now a nonzero constant gcd
        scale = pow(r0[0], -1, p)
        out = [(c * scale) % p for c in s0]
        out += [0] * (self.deg - len(out))
        return tuple(out[: self.deg])

    def pow(self, a: Element, k: int) -> Element:
        if k < 0:
            return self.pow(self.inv(a), -k)
        result = self.one
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def frobenius_q(self, a: Element) -> Element:
        """x -> x^q as e-fold application of the p-power map."""
        out = a
        for _ in range(self.e):
            out = self.pow(out, self.p)
        return out

    # -- element <-> integer keys -------------------------------------------

    def element_key(self, a: Element) -> int:
        """Base-p integer with the constant coefficient most significant.

        Keys enumerate 0..size-1 in the same order as `elements()`.
        """
        key = 0
        for c in a:
            key = key * self.p + c
        return key

    def key_element(self, key: int) -> Element:
        digits = []
        for _ in range(self.deg):
            digits.append(key % self.p)
            key //= self.p
        return tuple(reversed(digits))

    def elements(self) -> list[Element]:
        """All field elements in key order (only sensible for small fields)."""
        if self.size > 2 ** max_field_bits():
            raise BudgetExceededError(
                f"enumerating {self.size} field elements exceeds the budget"
            )
        return [e for e in itertools.product(range(self.p), repeat=self.deg)]

    # -- linear-algebra views ------------------------------------------------

    def reduction_matrix(self) -> np.ndarray:
        return _reduction_matrix(self.modulus, self.p)

    def mult_matrix(self, a: Element) -> np.ndarray:
        """Matrix of y -> a*y in the monomial basis (acts on coefficient columns)."""
        deg, p = self.deg, self.p
        mat = np.zeros((deg, deg), dtype=np.int64)
        col = np.array(a, dtype=np.int64)
        tail = np.array(self.modulus[:deg], dtype=np.int64)
        mat[:, 0] = col
        for j in range(1, deg):
            top = col[deg - 1]
            col = np.roll(col, 1)
            col[0] = 0
            if top:
                col = (col - top * tail) % p
            mat[:, j] = col
        return mat

    def frobenius_q_matrix(self) -> np.ndarray:
        """Matrix of the q-Frobenius (an F_p-linear map) on coefficients."""
        if not hasattr(self, "_frob_matrix"):
            frob_p = _frobenius_ring_matrix(list(self.modulus), self.p)
            self._frob_matrix = fplinalg.matpow_mod(frob_p, self.e, self.p)
        return self._frob_matrix


@lru_cache(maxsize=None)
def make_tower(p: int, e: int, r: int) -> FieldTower:
    """The field F_{p^{e r}} with the canonical (lex-smallest) modulus."""
    if not numtheory.is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    if e < 1 or r < 1:
        raise ValueError("e and r must be positive")
    bits = e * r * math.log2(p)
    if bits > max_field_bits():
        raise BudgetExceededError(
            f"field with 2^{bits:.1f} elements exceeds the "
            f"{max_field_bits()}-bit budget ({MAX_FIELD_BITS_ENV})"
        )
    return FieldTower(p, e, r, _find_modulus(p, e * r))


def frobenius_q(tower: FieldTower, a: Element) -> Element:
    return tower.frobenius_q(a)


def base_field_elements(tower: FieldTower) -> list[Element]:
    """The q elements fixed by the q-Frobenius, sorted by coefficient tuple."""
    frob = tower.frobenius_q_matrix()
    deg = tower.deg
    basis = fplinalg.kernel_basis(frob - np.eye(deg, dtype=np.int64), tower.p)
    if basis.shape[0] != tower.e:
        raise ConsistencyError(
            f"Frobenius fixed space has dimension {basis.shape[0]}, expected {tower.e}"
        )
    elems = set()
    for coeffs in itertools.product(range(tower.p), repeat=tower.e):
        vec = np.zeros(deg, dtype=np.int64)
        for c, b in zip(coeffs, basis):
            vec = (vec + c * b) % tower.p
        elems.add(tuple(int(v) for v in vec))
    if len(elems) != tower.q:
        raise ConsistencyError("Frobenius fixed points do not form a copy of F_q")
    return sorted(elems)
