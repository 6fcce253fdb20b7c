"""Brute-force verification engine.

Counts PGL_{N+1}(F_q)-orbits of rational n-sets and n-multisets by the
Cauchy-Frobenius average over the whole group.  For each group element
the joint orbit structure of <gamma, sigma> on points of degree <= n is
computed exactly: Frobenius orbits of degree-r points all have size r,
so the joint orbits at level r are unions of sigma-orbits along cycles
of the permutation gamma induces on them, of size r * cycle length.

The module also counts sigma^r-stable gamma-orbits of P^N and
sigma-stable gamma-orbits of A^N directly.  Points of such orbits
satisfy sigma^r(P) = gamma^i(P) for some i, so they are found exactly as
kernels of Frobenius-semilinear maps over F_p (points with a rescaling
making the relation hold on the nose always exist because every element
of the algebraic closure is a (q^r - 1)-th power).  The orbits
themselves are then enumerated point by point and their stability is
asserted, never assumed.

Fields are never enumerated beyond the configured budget; the big
fields backing the quotient counts are only used through F_p-linear
algebra.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import fplinalg, gfq, numtheory
from .errors import BudgetExceededError, ConsistencyError
from .gfq import Element, FieldTower

__all__ = [
    "ProjMatrix",
    "ProjPoint",
    "affine_quotient_count",
    "burnside_count",
    "enumerate_gl",
    "enumerate_pgl",
    "fix_count",
    "joint_orbit_tally",
    "pgl_order",
    "points_of_degree",
    "quotient_point_count",
]

Matrix = tuple[tuple[Element, ...], ...]


class ProjPoint(NamedTuple):
    """A point of P^N(F_{q^r}), first nonzero coordinate scaled to 1."""

    level: int
    coords: tuple[Element, ...]


class ProjMatrix(NamedTuple):
    """A PGL element: invertible matrix over F_q, first nonzero entry 1."""

    entries: Matrix


# -- exact matrix arithmetic over a tower -----------------------------------


def _mat_mul(t: FieldTower, a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    return tuple(
        tuple(
            _dot(t, a[i], tuple(b[k][j] for k in range(n)))
            for j in range(n)
        )
        for i in range(n)
    )


def _dot(t: FieldTower, row, col) -> Element:
    acc = t.zero
    for x, y in zip(row, col):
        acc = t.add(acc, t.mul(x, y))
    return acc


def _mat_vec(t: FieldTower, a: Matrix, v: tuple[Element, ...]) -> tuple[Element, ...]:
    return tuple(_dot(t, row, v) for row in a)


def _identity(t: FieldTower, n: int) -> Matrix:
    return tuple(
        tuple(t.one if i == j else t.zero for j in range(n)) for i in range(n)
    )


def _mat_det(t: FieldTower, a: Matrix) -> Element:
    n = len(a)
    if n == 1:
        return a[0][0]
    acc = t.zero
    for j in range(n):
        minor = tuple(row[:j] + row[j + 1 :] for row in a[1:])
        term = t.mul(a[0][j], _mat_det(t, minor))
        acc = t.add(acc, term) if j % 2 == 0 else t.sub(acc, term)
    return acc


def _mat_canon(t: FieldTower, a: Matrix) -> Matrix:
    """Scale so the first nonzero entry in row-major order is 1."""
    for row in a:
        for x in row:
            if x != t.zero:
                inv = t.inv(x)
                return tuple(tuple(t.mul(inv, y) for y in row2) for row2 in a)
    raise ValueError("zero matrix cannot be canonicalized")


def _scalar_of(t: FieldTower, a: Matrix) -> Element | None:
    """c if a == c * identity, else None."""
    n = len(a)
    c = a[0][0]
    for i in range(n):
        for j in range(n):
            if a[i][j] != (c if i == j else t.zero):
                return None
    return c


def _matrix_power(t: FieldTower, a: Matrix, k: int) -> Matrix:
    result = _identity(t, len(a))
    base = a
    while k:
        if k & 1:
            result = _mat_mul(t, result, base)
        base = _mat_mul(t, base, base)
        k >>= 1
    return result


def _projective_order(t: FieldTower, a: Matrix) -> tuple[int, Element]:
    """(s, c) with a^s = c * identity and s minimal."""
    power = a
    for s in range(1, 10**7):
        c = _scalar_of(t, power)
        if c is not None:
            return s, c
        power = _mat_mul(t, power, a)
    raise ConsistencyError("projective order not found")


def _element_order(t: FieldTower, c: Element) -> int:
    acc = c
    for k in range(1, t.size):
        if acc == t.one:
            return k
        acc = t.mul(acc, c)
    raise ConsistencyError("element order not found (element not invertible?)")


def pgl_order(N: int, q: int) -> int:
    """|PGL_{N+1}(F_q)|."""
    total = 1
    for i in range(N + 1):
        total *= q ** (N + 1) - q**i
    return total // (q - 1)


# -- group enumeration -------------------------------------------------------


def _base_tower(q: int) -> FieldTower:
    p, e = numtheory.factor_prime_power(q)
    return gfq.make_tower(p, e, 1)


def _check_enumeration_budget(count: int, what: str) -> None:
    if count > 2 ** gfq.max_field_bits():
        raise BudgetExceededError(
            f"enumerating {count} {what} exceeds the 2^{gfq.max_field_bits()} budget"
        )


@lru_cache(maxsize=None)
def enumerate_pgl(N: int, q: int) -> tuple[ProjMatrix, ...]:
    """Every element of PGL_{N+1}(F_q) exactly once, canonicalized."""
    if N not in (1, 2):
        raise ValueError("only N = 1 and N = 2 are supported")
    t1 = _base_tower(q)
    n = N + 1
    _check_enumeration_budget(q ** (n * n), "matrices")
    elems = t1.elements()
    nonzero = elems[1:] if elems[0] == t1.zero else [e for e in elems if e != t1.zero]
    mats = []
    # First nonzero entry (row-major) pinned to 1: its position varies.
    for lead in range(n * n):
        head = (t1.zero,) * lead + (t1.one,)
        for tail in itertools.product(elems, repeat=n * n - lead - 1):
            flat = head + tail
            rows = tuple(flat[i * n : (i + 1) * n] for i in range(n))
            if _mat_det(t1, rows) != t1.zero:
                mats.append(ProjMatrix(rows))
    expected = pgl_order(N, q)
    if len(mats) != expected:
        raise ConsistencyError(
            f"PGL_{n}(F_{q}) enumeration found {len(mats)}, expected {expected}"
        )
    del nonzero
    return tuple(mats)


@lru_cache(maxsize=None)
def enumerate_gl(N: int, q: int) -> tuple[Matrix, ...]:
    """Every invertible N x N matrix over F_q (no projective scaling)."""
    t1 = _base_tower(q)
    _check_enumeration_budget(q ** (N * N), "matrices")
    elems = t1.elements()
    mats = []
    for flat in itertools.product(elems, repeat=N * N):
        rows = tuple(flat[i * N : (i + 1) * N] for i in range(N))
        if _mat_det(t1, rows) != t1.zero:
            mats.append(rows)
    expected = 1
    for i in range(N):
        expected *= q**N - q**i
    if len(mats) != expected:
        raise ConsistencyError("GL enumeration count mismatch")
    return tuple(mats)


class _Group(NamedTuple):
    mats: tuple[ProjMatrix, ...]
    index: dict
    generators: tuple[int, ...]
    bfs_order: tuple[int, ...]
    parent: tuple[int, ...]
    gen_label: tuple[int, ...]


@lru_cache(maxsize=None)
def _group(N: int, q: int) -> _Group:
    t1 = _base_tower(q)
    mats = enumerate_pgl(N, q)
    index = {m: i for i, m in enumerate(mats)}
    ident = ProjMatrix(_identity(t1, N + 1))
    id_idx = index[ident]

    def closure(gen_indices: list[int]) -> set[int]:
        seen = {id_idx}
        frontier = [id_idx]
        gens = [mats[g].entries for g in gen_indices]
        while frontier:
            nxt = []
            for idx in frontier:
                for g in gens:
                    child = ProjMatrix(_mat_canon(t1, _mat_mul(t1, g, mats[idx].entries)))
                    ci = index[child]
                    if ci not in seen:
                        seen.add(ci)
                        nxt.append(ci)
            frontier = nxt
        return seen

    generators: list[int] = []
    reach = {id_idx}
    for idx in range(len(mats)):
        if idx in reach:
            continue
        generators.append(idx)
        reach = closure(generators)
        if len(reach) == len(mats):
            break
    if len(reach) != len(mats):
        raise ConsistencyError("generators do not span the group")

    # BFS tree; child = generator o parent as maps of P^N.
    parent = [-1] * len(mats)
    gen_label = [-1] * len(mats)
    order = [id_idx]
    seen = {id_idx}
    pos = 0
    while pos < len(order):
        cur = order[pos]
        pos += 1
        for gi, g in enumerate(generators):
            child = ProjMatrix(
                _mat_canon(t1, _mat_mul(t1, mats[g].entries, mats[cur].entries))
            )
            ci = index[child]
            if ci not in seen:
                seen.add(ci)
                parent[ci] = cur
                gen_label[ci] = gi
                order.append(ci)
    return _Group(
        mats, index, tuple(generators), tuple(order), tuple(parent), tuple(gen_label)
    )


# -- batched arithmetic on whole fields --------------------------------------


class _BatchField:
    """numpy views of a tower: rows of coefficient vectors, reduced mod p."""

    def __init__(self, tower: FieldTower):
        self.t = tower
        self.p = tower.p
        self.deg = tower.deg
        self.red_t = tower.reduction_matrix().T  # (2deg-1, deg)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        deg, p = self.deg, self.p
        conv = np.zeros((a.shape[0], 2 * deg - 1), dtype=np.int64)
        for i in range(deg):
            col = a[:, i]
            if col.any():
                conv[:, i : i + deg] += col[:, None] * b
        conv %= p
        return (conv @ self.red_t) % p

    def pow(self, a: np.ndarray, k: int) -> np.ndarray:
        result = np.zeros_like(a)
        result[:, 0] = 1
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def inv(self, a: np.ndarray) -> np.ndarray:
        """Batched Fermat inverse; rows must be nonzero."""
        return self.pow(a, self.t.size - 2)

    def apply(self, m: np.ndarray, a: np.ndarray) -> np.ndarray:
        return (a @ m.T) % self.p


# -- point tables -------------------------------------------------------------


class _PointTable:
    """Index-space model of P^N(F_{q^r}).

    Field elements are indexed 0..q^r-1 in key order.  Projective points
    are indexed blockwise by their canonical form: for N = 1, (1:y) then
    (0:1); for N = 2, (1:y:z), then (0:1:z), then (0:0:1).
    """

    def __init__(self, N: int, q: int, r: int):
        p, e = numtheory.factor_prime_power(q)
        self.N, self.q, self.r = N, q, r
        self.tower = gfq.make_tower(p, e, r)
        t = self.tower
        self.size = t.size
        self.npts = (self.size ** (N + 1) - 1) // (self.size - 1)
        _check_enumeration_budget(self.npts, "projective points")
        self.bf = _BatchField(t)
        self.p = t.p
        self.deg = t.deg
        self.pw = np.array(
            [p ** (self.deg - 1 - j) for j in range(self.deg)], dtype=np.int64
        )
        self.field = np.array(
            list(itertools.product(range(p), repeat=self.deg)), dtype=np.int64
        )
        # Batched Fermat gives 1 at index 0; pin it back to 0 (never used).
        inv_arr = self.bf.inv(self.field)
        self.inv_idx = self.encode(inv_arr)
        self.inv_idx[0] = 0
        frob = t.frobenius_q_matrix()
        self.frob_idx = self.encode(self.bf.apply(frob, self.field))
        self.sigma_perm = self._sigma_point_perm()
        self._emb = _base_embedding(t)

    # field index helpers

    def encode(self, rows: np.ndarray) -> np.ndarray:
        return rows @ self.pw

    def field_rows(self, idx: np.ndarray) -> np.ndarray:
        return self.field[idx]

    # point decode

    def point_coords(self, idx: int) -> tuple[Element, ...]:
        t, size = self.tower, self.size
        if self.N == 1:
            if idx < size:
                return (t.one, tuple(int(c) for c in self.field[idx]))
            return (t.zero, t.one)
        if idx < size * size:
            y, z = divmod(idx, size)
            return (
                t.one,
                tuple(int(c) for c in self.field[y]),
                tuple(int(c) for c in self.field[z]),
            )
        if idx < size * size + size:
            return (t.zero, t.one, tuple(int(c) for c in self.field[idx - size * size]))
        return (t.zero, t.zero, t.one)

    def _sigma_point_perm(self) -> np.ndarray:
        size, fr = self.size, self.frob_idx
        if self.N == 1:
            return np.concatenate([fr, [size]])
        grid = fr[:, None] * size + fr[None, :]
        mid = size * size + fr
        return np.concatenate([grid.ravel(), mid, [size * size + size]])

    # canonical index of (u : w) rows, u/w given as coefficient arrays

    def _canon2(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        out = np.empty(u.shape[0], dtype=np.int64)
        nz = u.any(axis=1)
        out[~nz] = self.size
        if nz.any():
            inv_u = self.field[self.inv_idx[self.encode(u[nz])]]
            out[nz] = self.encode(self.bf.mul(w[nz], inv_u))
        return out

    def _canon3(self, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        size = self.size
        out = np.empty(u.shape[0], dtype=np.int64)
        nzu = u.any(axis=1)
        nzv = v.any(axis=1)
        top = nzu
        mid = ~nzu & nzv
        low = ~nzu & ~nzv
        if top.any():
            inv_u = self.field[self.inv_idx[self.encode(u[top])]]
            y = self.encode(self.bf.mul(v[top], inv_u))
            z = self.encode(self.bf.mul(w[top], inv_u))
            out[top] = y * size + z
        if mid.any():
            inv_v = self.field[self.inv_idx[self.encode(v[mid])]]
            out[mid] = size * size + self.encode(self.bf.mul(w[mid], inv_v))
        out[low] = size * size + size
        return out

    def matrix_point_perm(self, mat: Matrix) -> np.ndarray:
        """Permutation of point indices induced by a base-field matrix."""
        t = self.tower
        emb = self._emb
        rows = [[emb[x] for x in row] for row in mat.entries] if isinstance(
            mat, ProjMatrix
        ) else [[emb[x] for x in row] for row in mat]
        mult = {
            (i, j): t.mult_matrix(rows[i][j]) for i in range(self.N + 1) for j in range(self.N + 1)
        }
        const = {
            (i, j): np.array(rows[i][j], dtype=np.int64) for i in range(self.N + 1) for j in range(self.N + 1)
        }
        size = self.size
        bf = self.bf
        if self.N == 1:
            y = self.field
            u = (const[(0, 0)][None, :] + bf.apply(mult[(0, 1)], y)) % self.p
            w = (const[(1, 0)][None, :] + bf.apply(mult[(1, 1)], y)) % self.p
            main = self._canon2(u, w)
            # image of (0 : 1) is the second column
            tail_u = const[(0, 1)][None, :]
            tail_w = const[(1, 1)][None, :]
            tail = self._canon2(tail_u, tail_w)
            return np.concatenate([main, tail])
        # N == 2
        yg = np.repeat(np.arange(size), size)
        zg = np.tile(np.arange(size), size)
        y = self.field[yg]
        z = self.field[zg]

        def image(cy, cz, c1):
            return [
                (
                    c1[(i, 0)][None, :]
                    + (bf.apply(cy[(i, 1)], y) if cy is not None else 0)
                    + (bf.apply(cz[(i, 2)], z) if cz is not None else 0)
                )
                % self.p
                for i in range(3)
            ]

        u, v, w = (
            (const[(i, 0)][None, :] + bf.apply(mult[(i, 1)], y) + bf.apply(mult[(i, 2)], z))
            % self.p
            for i in range(3)
        )
        main = self._canon3(u, v, w)
        zs = self.field
        u2, v2, w2 = (
            (const[(i, 1)][None, :] + bf.apply(mult[(i, 2)], zs)) % self.p
            for i in range(3)
        )
        midseg = self._canon3(u2, v2, w2)
        u3, v3, w3 = (const[(i, 2)][None, :] for i in range(3))
        last = self._canon3(u3, v3, w3)
        return np.concatenate([main, midseg, last])


@lru_cache(maxsize=None)
def _point_table(N: int, q: int, r: int) -> _PointTable:
    return _PointTable(N, q, r)


def _cycle_min_labels(perm: np.ndarray) -> np.ndarray:
    """Per index, the minimum index on its cycle (vectorized doubling)."""
    labels = np.arange(perm.size, dtype=np.int64)
    power = perm
    span = 1
    while span < perm.size:
        labels = np.minimum(labels, labels[power])
        power = power[power]
        span <<= 1
    return labels


class _LevelOrbits(NamedTuple):
    ids: np.ndarray      # orbit id per point index, -1 off the degree-r locus
    reps: np.ndarray     # minimal point index per orbit id
    count: int           # number of degree-r sigma-orbits (= b_r)


@lru_cache(maxsize=None)
def _level_orbits(N: int, q: int, r: int) -> _LevelOrbits:
    table = _point_table(N, q, r)
    perm = table.sigma_perm
    degree_mask = np.ones(table.npts, dtype=bool)
    for d in numtheory.divisors(r):
        if d == r:
            continue
        power = perm
        for _ in range(d - 1):
            power = perm[power]
        degree_mask &= power != np.arange(table.npts)
    labels = _cycle_min_labels(perm)
    reps, inverse = np.unique(labels[degree_mask], return_inverse=True)
    ids = np.full(table.npts, -1, dtype=np.int64)
    ids[degree_mask] = inverse
    if int(degree_mask.sum()) != reps.size * r:
        raise ConsistencyError(
            f"degree-{r} locus of P^{N}(F_{q}^{r}) is not a union of size-{r} orbits"
        )
    return _LevelOrbits(ids, reps, int(reps.size))


def _hat_perm(table: _PointTable, orbits: _LevelOrbits, mat) -> np.ndarray:
    """Permutation the matrix induces on degree-r sigma-orbits."""
    point_perm = table.matrix_point_perm(mat)
    hat = orbits.ids[point_perm[orbits.reps]]
    if (hat < 0).any():
        raise ConsistencyError("matrix action does not preserve point degree")
    return hat


def _cycle_length_tally(hat: list[int]) -> Counter:
    visited = bytearray(len(hat))
    tally: Counter = Counter()
    for start in range(len(hat)):
        if visited[start]:
            continue
        length = 0
        cur = start
        while not visited[cur]:
            visited[cur] = 1
            cur = hat[cur]
            length += 1
        tally[length] += 1
    return tally


@lru_cache(maxsize=None)
def _group_level_tallies(N: int, q: int, r: int) -> tuple[dict, ...]:
    """Per group element: {joint orbit size: multiplicity} at level r."""
    group = _group(N, q)
    table = _point_table(N, q, r)
    orbits = _level_orbits(N, q, r)
    gen_hats = {
        gi: _hat_perm(table, orbits, group.mats[g]).astype(np.int64)
        for gi, g in enumerate(group.generators)
    }
    pending_children = Counter(p for p in group.parent if p >= 0)
    tallies: list[dict | None] = [None] * len(group.mats)
    hats: dict[int, np.ndarray] = {}
    for idx in group.bfs_order:
        if group.parent[idx] < 0:
            hat = np.arange(orbits.count, dtype=np.int64)
        else:
            hat = gen_hats[group.gen_label[idx]][hats[group.parent[idx]]]
        cycles = _cycle_length_tally(hat.tolist())
        tallies[idx] = {length * r: mult for length, mult in cycles.items()}
        if pending_children[idx]:
            hats[idx] = hat
        parent = group.parent[idx]
        if parent >= 0:
            pending_children[parent] -= 1
            if pending_children[parent] == 0:
                del hats[parent]
    return tuple(tallies)  # type: ignore[arg-type]


# -- public oracle operations -------------------------------------------------


def points_of_degree(N: int, q: int, r: int, tower: FieldTower) -> list[ProjPoint]:
    """All points of P^N(F_{q^r}) of degree exactly r, canonicalized."""
    p, e = numtheory.factor_prime_power(q)
    if (tower.p, tower.e, tower.r) != (p, e, r):
        raise ValueError("tower does not match (q, r)")
    table = _point_table(N, q, r)
    orbits = _level_orbits(N, q, r)
    idxs = np.nonzero(orbits.ids >= 0)[0]
    return [ProjPoint(r, table.point_coords(int(i))) for i in idxs]


def joint_orbit_tally(gamma: ProjMatrix, N: int, q: int, n: int) -> Counter:
    """Sizes of joint <gamma, sigma>-orbits among points of degree <= n."""
    if n < 1:
        return Counter()
    tally: Counter = Counter()
    for r in range(1, n + 1):
        table = _point_table(N, q, r)
        orbits = _level_orbits(N, q, r)
        hat = _hat_perm(table, orbits, gamma)
        for length, mult in _cycle_length_tally(hat.tolist()).items():
            tally[length * r] += mult
    return tally


def fix_count(tally: Counter, n: int, multiset: bool) -> int:
    """Number of invariant rational n-sets (or n-multisets) for this tally.

    Coefficient of x^n in the product over orbit sizes s with
    multiplicity m of (1 + x^s)^m, or (1 - x^s)^-m for multisets.
    """
    poly = [0] * (n + 1)
    poly[0] = 1
    for s, m in sorted(tally.items()):
        if s > n:
            continue
        limit = n // s
        if multiset:
            row = [math.comb(m + t - 1, t) for t in range(limit + 1)]
        else:
            row = [math.comb(m, t) for t in range(min(m, limit) + 1)]
        new = [0] * (n + 1)
        for j in range(n + 1):
            pj = poly[j]
            if pj:
                for tt, rt in enumerate(row):
                    k = j + tt * s
                    if k > n:
                        break
                    new[k] += pj * rt
        poly = new
    return poly[n]


def burnside_count(N: int, q: int, n: int, multiset: bool) -> int:
    """(1 / |PGL|) * sum over the group of invariant n-(multi)set counts."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    group = _group(N, q)
    per_level = [_group_level_tallies(N, q, r) for r in range(1, n + 1)]
    total = 0
    for idx in range(len(group.mats)):
        tally: Counter = Counter()
        for level in per_level:
            tally.update(level[idx])
        total += fix_count(tally, n, multiset)
    order = len(group.mats)
    if total % order != 0:
        raise ConsistencyError(
            f"Burnside sum {total} is not divisible by |PGL| = {order}"
        )
    return total // order


# -- embeddings of the base field --------------------------------------------


@lru_cache(maxsize=None)
def _base_embedding(tower: FieldTower) -> dict[Element, Element]:
    """Map level-1 elements of F_q into this tower, deterministically.

    For prime q the embedding is the canonical one on constants.  For
    q = p^e the generator of the level-1 presentation is sent to the
    lexicographically smallest root of the level-1 modulus among the
    Frobenius-fixed elements; Galois-conjugate choices give isomorphic
    joint actions, so any fixed deterministic choice is sound.
    """
    p, e = tower.p, tower.e
    t1 = gfq.make_tower(p, e, 1)
    if e == 1:
        return {(c,): tower.from_int(c) for c in range(p)}
    base = gfq.base_field_elements(tower)
    m1 = t1.modulus
    roots = []
    for cand in base:
        acc = tower.zero
        power = tower.one
        for coeff in m1:
            if coeff:
                acc = tower.add(acc, tuple((coeff * x) % p for x in power))
            power = tower.mul(power, cand)
        if acc == tower.zero:
            roots.append(cand)
    if len(roots) != e:
        raise ConsistencyError("level-1 modulus does not split in the Frobenius-fixed field")
    root = min(roots)
    emb: dict[Element, Element] = {}
    for elem in t1.elements():
        acc = tower.zero
        power = tower.one
        for coeff in elem:
            if coeff:
                acc = tower.add(acc, tuple((coeff * x) % p for x in power))
            power = tower.mul(power, root)
        emb[elem] = acc
    return emb


# -- sigma^r-stable gamma-orbits of P^N ---------------------------------------


def _block_linear_map(tower: FieldTower, rows: list[list[Element]]) -> np.ndarray:
    """F_p-matrix of v -> A v on tower^k, entries acting by multiplication."""
    k = len(rows)
    deg = tower.deg
    out = np.zeros((k * deg, k * deg), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            out[i * deg : (i + 1) * deg, j * deg : (j + 1) * deg] = tower.mult_matrix(
                rows[i][j]
            )
    return out


class _SpanTracker:
    """Incremental F_p row span with membership tests."""

    def __init__(self, dim: int, p: int):
        self.p = p
        self.rows: dict[int, np.ndarray] = {}  # pivot column -> normalized row

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        v = vec % self.p
        for c, row in self.rows.items():
            if v[c]:
                v = (v - v[c] * row) % self.p
        return v

    def add(self, vec: np.ndarray) -> bool:
        v = self.reduce(vec)
        nz = np.nonzero(v)[0]
        if nz.size == 0:
            return False
        c = int(nz[0])
        v = (v * pow(int(v[c]), -1, self.p)) % self.p
        for c2 in list(self.rows):
            row = self.rows[c2]
            if row[c]:
                self.rows[c2] = (row - row[c] * v) % self.p
        self.rows[c] = v
        return True


class _SmallModel(NamedTuple):
    """F_{q^{rs}} as a standalone field, linearly identified with a subfield."""

    field: FieldTower
    to_small: np.ndarray      # (k, deg_big): coordinates w.r.t. theta powers
    basis_big: np.ndarray     # (k, deg_big): theta powers as big-field rows


def _small_model(big: FieldTower, subfield_frob_power: int) -> _SmallModel:
    """Model the fixed field of sigma_q^subfield_frob_power inside `big`."""
    p = big.p
    frob = big.frobenius_q_matrix()
    fixed = fplinalg.matpow_mod(frob, subfield_frob_power, p)
    basis = fplinalg.kernel_basis(fixed - np.eye(big.deg, dtype=np.int64), p)
    k = basis.shape[0]
    bf = _BatchField(big)
    # Find a generator: an element whose powers 1, theta, ..., theta^(k-1)
    # are linearly independent.  Random-free: try basis vectors, then sums.
    candidates = [basis[i] for i in range(k)]
    candidates += [basis[: i + 1].sum(axis=0) % p for i in range(k)]
    for cand in candidates:
        rows = [np.zeros(big.deg, dtype=np.int64)]
        rows[0][0] = 1
        ok = True
        tracker = _SpanTracker(big.deg, p)
        tracker.add(rows[0])
        for _ in range(k - 1):
            nxt = bf.mul(rows[-1][None, :], cand[None, :])[0]
            if not tracker.add(nxt):
                ok = False
                break
            rows.append(nxt)
        if not ok:
            continue
        theta = cand
        power_basis = np.stack(rows)  # (k, deg)
        top = bf.mul(rows[-1][None, :], theta[None, :])[0]
        # minimal polynomial: theta^k = sum_j mu_j theta^j
        mu = fplinalg.solve_right(power_basis.T, top, p)
        if mu is None:
            raise ConsistencyError("generator powers do not span their field")
        modulus = tuple(int(-m % p) for m in mu) + (1,)
        e_r = subfield_frob_power * big.e
        small = FieldTower(p, big.e, k // big.e, modulus)
        # left inverse of power_basis^T: coords of subfield vectors
        to_small = np.zeros((k, big.deg), dtype=np.int64)
        for j in range(k):
            rhs = np.zeros(k, dtype=np.int64)
            rhs[j] = 1
            sol = fplinalg.solve_right(power_basis.T.T, rhs, p)  # (k x deg)^T x = e_j
            if sol is None:
                raise ConsistencyError("power basis has no left inverse")
            to_small[j] = sol
        del e_r
        return _SmallModel(small, to_small, power_basis)
    raise ConsistencyError("no generator found for subfield model")


def _project_small(model: _SmallModel, rows: np.ndarray, p: int) -> np.ndarray:
    """Coordinates of subfield elements (big rows) in the small model."""
    coords = (rows @ model.to_small.T) % p
    back = (coords @ model.basis_big) % p
    if (back != rows % p).any():
        raise ConsistencyError("vector outside the subfield being modeled")
    return coords


def _canonical_c_tuples(k_blocks: int, subfield: list[np.ndarray]) -> list[list]:
    """Canonical projective coefficient tuples over an enumerated subfield."""
    zero = None
    out = []
    one_pos = 0
    for lead in range(k_blocks):
        rest = itertools.product(subfield, repeat=k_blocks - lead - 1)
        for tail in rest:
            out.append([zero] * lead + [one_pos] + list(tail))
    return out


def quotient_point_count(gamma: ProjMatrix, N: int, q: int, r: int) -> int:
    """Number of gamma-orbits of P^N points whose orbit is sigma^r-stable.

    Every point of such an orbit satisfies sigma^r(P) = gamma^i(P) for
    some i below the projective order s of gamma, hence lies in
    P^N(F_{q^{rs}}).  The candidate sets are computed as kernels of the
    F_p-linear maps sigma^r - gamma^i over the field F_{q^{r m}} (m the
    matrix order of the lift), the orbits are enumerated explicitly, and
    stability of each counted orbit is asserted.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    p, e = numtheory.factor_prime_power(q)
    t1 = gfq.make_tower(p, e, 1)
    mat = gamma.entries
    if _mat_det(t1, mat) == t1.zero:
        raise ValueError("matrix is singular")
    s, scalar = _projective_order(t1, mat)
    s_mat = s * _element_order(t1, scalar)

    big = gfq.make_tower(p, e, r * s_mat)
    emb = _base_embedding(big)
    frob = big.frobenius_q_matrix()
    sigma_r = fplinalg.matpow_mod(frob, r, p)
    dim = (N + 1) * big.deg
    sigma_block = np.zeros((dim, dim), dtype=np.int64)
    for i in range(N + 1):
        sigma_block[i * big.deg : (i + 1) * big.deg, i * big.deg : (i + 1) * big.deg] = sigma_r

    model = _small_model(big, r * s)
    small = model.field
    small_bf = _BatchField(small)
    frob_small = small.frobenius_q_matrix()
    sigma_r_small = fplinalg.matpow_mod(frob_small, r, p)

    # F_{q^r} copy inside big, for the projective coefficient enumeration.
    sub_r = fplinalg.kernel_basis(
        fplinalg.matpow_mod(frob, r, p) - np.eye(big.deg, dtype=np.int64), p
    )
    if sub_r.shape[0] != r * e:
        raise ConsistencyError("sigma^r fixed field has wrong dimension")
    subfield_vecs = [
        np.tensordot(np.array(c, dtype=np.int64), sub_r, axes=1) % p
        for c in itertools.product(range(p), repeat=sub_r.shape[0])
    ]

    big_bf = _BatchField(big)
    kappa = s_mat // s

    point_arrays = []
    point_keys: dict[bytes, int] = {}

    def add_points(rows_small: np.ndarray) -> None:
        for row in rows_small:
            key = row.astype(np.int8).tobytes()
            if key not in point_keys:
                point_keys[key] = len(point_keys)
                point_arrays.append(row)

    lift_power = _identity(t1, N + 1)
    for i in range(s):
        rho_rows = [[emb[x] for x in row] for row in lift_power]
        rho_lin = _block_linear_map(big, rho_rows)
        kernel = fplinalg.kernel_basis((sigma_block - rho_lin) % p, p)
        if kernel.shape[0] != (N + 1) * r * e:
            raise ConsistencyError(
                f"semilinear kernel has F_p-dimension {kernel.shape[0]}, "
                f"expected {(N + 1) * r * e}"
            )
        # F_{q^r}-basis of the kernel
        tracker = _SpanTracker(dim, p)
        chosen: list[np.ndarray] = []
        for vec in kernel:
            if not tracker.reduce(vec).any():
                continue
            chosen.append(vec)
            for sub in subfield_vecs[1:]:
                prod = np.concatenate(
                    [
                        big_bf.mul(vec[j * big.deg : (j + 1) * big.deg][None, :], sub[None, :])[0]
                        for j in range(N + 1)
                    ]
                )
                tracker.add(prod)
            if len(chosen) == N + 1:
                break
        if len(chosen) != N + 1:
            raise ConsistencyError("kernel is not free of rank N+1 over F_{q^r}")

        # All products (subfield basis element) * (kernel basis vector).
        prods = []
        for w in chosen:
            for sub in subfield_vecs_basis(sub_r, p):
                prods.append(
                    np.concatenate(
                        [
                            big_bf.mul(
                                w[j * big.deg : (j + 1) * big.deg][None, :], sub[None, :]
                            )[0]
                            for j in range(N + 1)
                        ]
                    )
                )
        prod_mat = np.stack(prods)  # ((N+1)*re, dim)

        # Canonical projective coefficient tuples over F_{q^r}.
        re_dim = r * e
        coeff_rows = []
        one_coords = fplinalg.solve_right(sub_r.T, _one_vec(big), p)
        if one_coords is None:
            raise ConsistencyError("1 is not in the subfield")
        for lead in range(N + 1):
            frees = itertools.product(
                itertools.product(range(p), repeat=re_dim), repeat=N - lead
            )
            for tail in frees:
                row = np.zeros((N + 1) * re_dim, dtype=np.int64)
                row[lead * re_dim : (lead + 1) * re_dim] = one_coords
                for t_i, coeffs in enumerate(tail):
                    j = lead + 1 + t_i
                    row[j * re_dim : (j + 1) * re_dim] = coeffs
                coeff_rows.append(row)
        coeff_mat = np.stack(coeff_rows)
        vectors = (coeff_mat @ prod_mat) % p  # (nclasses, dim)

        add_points(_canonicalize_classes(big, big_bf, model, vectors, N, r, s, kappa))

        lift_power = _mat_mul(t1, lift_power, mat)

    X = np.stack(point_arrays)
    n_pts = X.shape[0]

    # gamma and sigma^r in the small model
    small_entries = [
        [_project_small(model, np.array(emb[x], dtype=np.int64)[None, :], p)[0] for x in row]
        for row in mat
    ]
    k = small.deg
    gamma_imgs = np.zeros((n_pts, (N + 1) * k), dtype=np.int64)
    for i in range(N + 1):
        acc = np.zeros((n_pts, k), dtype=np.int64)
        for j in range(N + 1):
            mm = small.mult_matrix(tuple(int(c) for c in small_entries[i][j]))
            acc = (acc + small_bf.apply(mm, X[:, j * k : (j + 1) * k])) % p
        gamma_imgs[:, i * k : (i + 1) * k] = acc
    gamma_canon = _canonical_small(small, small_bf, gamma_imgs, N)

    perm = np.empty(n_pts, dtype=np.int64)
    for row_idx in range(n_pts):
        key = gamma_canon[row_idx].astype(np.int8).tobytes()
        if key not in point_keys:
            raise ConsistencyError("gamma image leaves the candidate point set")
        perm[row_idx] = point_keys[key]

    labels = _cycle_min_labels(perm)

    sigma_imgs = np.zeros_like(X)
    for i in range(N + 1):
        sigma_imgs[:, i * k : (i + 1) * k] = small_bf.apply(
            sigma_r_small, X[:, i * k : (i + 1) * k]
        )
    for row_idx in range(n_pts):
        key = sigma_imgs[row_idx].astype(np.int8).tobytes()
        if key not in point_keys:
            raise ConsistencyError("sigma^r image leaves the candidate point set")
        if labels[point_keys[key]] != labels[row_idx]:
            raise ConsistencyError("a counted gamma-orbit is not sigma^r-stable")

    return int(np.unique(labels).size)


def _one_vec(tower: FieldTower) -> np.ndarray:
    v = np.zeros(tower.deg, dtype=np.int64)
    v[0] = 1
    return v


def subfield_vecs_basis(sub: np.ndarray, p: int) -> list[np.ndarray]:
    return [sub[i] for i in range(sub.shape[0])]


def _canonicalize_classes(
    big: FieldTower,
    big_bf: _BatchField,
    model: _SmallModel,
    vectors: np.ndarray,
    N: int,
    r: int,
    s: int,
    kappa: int,
) -> np.ndarray:
    """Canonical small-model coordinates of the projective classes of rows.

    Scaling a row by the inverse of its leading coordinate u stays inside
    the subfield F_{q^{rs}}; u itself need not lie there, so the division
    is done as (v * ubar) / N(u) with ubar the product of the nontrivial
    Galois conjugates of u over the subfield and N(u) the norm, which is
    a subfield element invertible by a small-field Fermat power.
    """
    p = big.p
    deg = big.deg
    k = model.field.deg
    small_bf = _BatchField(model.field)
    frob = big.frobenius_q_matrix()
    sigma_rs = fplinalg.matpow_mod(frob, r * s, p)
    n = vectors.shape[0]
    out = np.zeros((n, (N + 1) * k), dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    one_small = np.zeros(k, dtype=np.int64)
    one_small[0] = 1
    for lead in range(N + 1):
        blocks = [vectors[:, j * deg : (j + 1) * deg] for j in range(N + 1)]
        mask = ~done & blocks[lead].any(axis=1)
        if not mask.any():
            continue
        u = blocks[lead][mask]
        ubar = np.zeros((u.shape[0], deg), dtype=np.int64)
        ubar[:, 0] = 1
        conj = u
        for _ in range(kappa - 1):
            conj = big_bf.apply(sigma_rs, conj)
            ubar = big_bf.mul(ubar, conj)
        norm = big_bf.mul(u, ubar)
        norm_small = _project_small(model, norm, p)
        inv_norm = small_bf.inv(norm_small)
        rows_small = np.zeros((u.shape[0], (N + 1) * k), dtype=np.int64)
        rows_small[:, lead * k : (lead + 1) * k] = one_small
        for j in range(N + 1):
            if j == lead:
                continue
            num = big_bf.mul(blocks[j][mask], ubar)
            num_small = _project_small(model, num, p)
            rows_small[:, j * k : (j + 1) * k] = small_bf.mul(num_small, inv_norm)
        # coordinates before the leading one must vanish
        for j in range(lead):
            if rows_small[:, j * k : (j + 1) * k].any():
                raise ConsistencyError("canonical form has entries before the pivot")
        out[mask] = rows_small
        done |= mask
    if not done.all():
        raise ConsistencyError("zero vector among projective representatives")
    return out


def _canonical_small(
    small: FieldTower, small_bf: _BatchField, rows: np.ndarray, N: int
) -> np.ndarray:
    """Canonicalize (N+1)-coordinate small-field rows projectively."""
    p = small.p
    k = small.deg
    n = rows.shape[0]
    out = np.zeros_like(rows)
    done = np.zeros(n, dtype=bool)
    one_small = np.zeros(k, dtype=np.int64)
    one_small[0] = 1
    for lead in range(N + 1):
        block = rows[:, lead * k : (lead + 1) * k]
        mask = ~done & block.any(axis=1)
        if not mask.any():
            continue
        inv_u = small_bf.inv(block[mask])
        out[mask, lead * k : (lead + 1) * k] = one_small
        for j in range(lead + 1, N + 1):
            out[mask, j * k : (j + 1) * k] = small_bf.mul(
                rows[mask, j * k : (j + 1) * k], inv_u
            )
        done |= mask
    if not done.all():
        raise ConsistencyError("zero row cannot be projectivized")
    return out


# -- sigma-stable gamma-orbits of A^N -----------------------------------------


def affine_quotient_count(gamma: Matrix, q: int) -> int:
    """Number of sigma-stable gamma-orbits of A^N, gamma in GL_N(F_q).

    Points of such orbits satisfy sigma(P) = gamma^i(P) for some i below
    the order m of gamma, hence lie in A^N(F_{q^m}); they are collected
    as kernels of sigma - gamma^i over F_p, partitioned into
    gamma-orbits, and stability of every orbit is asserted.
    """
    p, e = numtheory.factor_prime_power(q)
    t1 = gfq.make_tower(p, e, 1)
    N = len(gamma)
    if any(len(row) != N for row in gamma):
        raise ValueError("matrix is not square")
    if _mat_det(t1, gamma) == t1.zero:
        raise ValueError("matrix is singular")
    m = 1
    power = gamma
    ident = _identity(t1, N)
    while power != ident:
        power = _mat_mul(t1, power, gamma)
        m += 1
        if m > 10**6:
            raise ConsistencyError("matrix order not found")

    big = gfq.make_tower(p, e, m)
    emb = _base_embedding(big)
    frob = big.frobenius_q_matrix()
    dim = N * big.deg
    sigma_block = np.zeros((dim, dim), dtype=np.int64)
    for i in range(N):
        sigma_block[i * big.deg : (i + 1) * big.deg, i * big.deg : (i + 1) * big.deg] = frob

    keys: dict[bytes, int] = {}
    rows_acc: list[np.ndarray] = []
    lift_power = ident
    gamma_lin = None
    for i in range(m):
        rho_rows = [[emb[x] for x in row] for row in lift_power]
        rho_lin = _block_linear_map(big, rho_rows)
        if i == 1:
            gamma_lin = rho_lin
        kernel = fplinalg.kernel_basis((sigma_block - rho_lin) % p, p)
        kdim = kernel.shape[0]
        if p**kdim > 2**20:
            raise BudgetExceededError("semilinear solution space too large to enumerate")
        combos = np.array(
            list(itertools.product(range(p), repeat=kdim)), dtype=np.int64
        )
        pts = (combos @ kernel) % p if kdim else np.zeros((1, dim), dtype=np.int64)
        for row in pts:
            key = row.astype(np.int8).tobytes()
            if key not in keys:
                keys[key] = len(keys)
                rows_acc.append(row)
        lift_power = _mat_mul(t1, lift_power, gamma)
    if gamma_lin is None:  # m == 1, gamma is the identity
        rho_rows = [[emb[x] for x in row] for row in gamma]
        gamma_lin = _block_linear_map(big, rho_rows)

    X = np.stack(rows_acc)
    imgs = (X @ gamma_lin.T) % p
    perm = np.empty(X.shape[0], dtype=np.int64)
    for idx in range(X.shape[0]):
        key = imgs[idx].astype(np.int8).tobytes()
        if key not in keys:
            raise ConsistencyError("gamma image leaves the candidate point set")
        perm[idx] = keys[key]
    labels = _cycle_min_labels(perm)

    sig_imgs = (X @ sigma_block.T) % p
    for idx in range(X.shape[0]):
        key = sig_imgs[idx].astype(np.int8).tobytes()
        if key not in keys:
            raise ConsistencyError("sigma image leaves the candidate point set")
        if labels[keys[key]] != labels[idx]:
            raise ConsistencyError("a counted gamma-orbit is not sigma-stable")

    return int(np.unique(labels).size)
