"""Dense exact linear algebra over prime fields F_p.

Matrices are numpy int64 arrays with entries reduced mod p.  Dimensions
in this package stay in the low hundreds, so straightforward Gauss-Jordan
elimination with vectorized row updates is fast and exact (int64 never
overflows for p <= 64 at these sizes).
"""

from __future__ import annotations

import numpy as np

__all__ = ["row_reduce", "rank", "kernel_basis", "matmul_mod", "matpow_mod", "solve_right"]


def _inv_mod(a: int, p: int) -> int:
    return pow(int(a), -1, p)


def row_reduce(mat: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod p and the list of pivot columns."""
    a = np.array(mat, dtype=np.int64) % p
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        pivot = r + int(nz[0])
        if pivot != r:
            a[[r, pivot]] = a[[pivot, r]]
        a[r] = (a[r] * _inv_mod(a[r, c], p)) % p
        factors = a[:, c].copy()
        factors[r] = 0
        a -= np.outer(factors, a[r])
        a %= p
        pivots.append(c)
        r += 1
    return a, pivots


def rank(mat: np.ndarray, p: int) -> int:
    return len(row_reduce(mat, p)[1])


def kernel_basis(mat: np.ndarray, p: int) -> np.ndarray:
    """Basis of the right kernel {x : mat @ x = 0 mod p}, one vector per row."""
    a, pivots = row_reduce(mat, p)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-a[r, fc]) % p
    return basis


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return (a @ b) % p


def matpow_mod(a: np.ndarray, k: int, p: int) -> np.ndarray:
    """a^k mod p by repeated squaring; k = 0 gives the identity."""
    n = a.shape[0]
    result = np.eye(n, dtype=np.int64)
    base = np.array(a, dtype=np.int64) % p
    while k:
        if k & 1:
            result = (result @ base) % p
        base = (base @ base) % p
        k >>= 1
    return result


def solve_right(mat: np.ndarray, rhs: np.ndarray, p: int) -> np.ndarray | None:
    """One solution x of mat @ x = rhs mod p, or None if inconsistent."""
    a = np.array(mat, dtype=np.int64) % p
    b = np.array(rhs, dtype=np.int64) % p
    aug = np.hstack([a, b.reshape(-1, 1)])
    red, pivots = row_reduce(aug, p)
    cols = a.shape[1]
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = red[r, cols]
    return x
