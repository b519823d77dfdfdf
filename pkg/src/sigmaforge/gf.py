"""Small dense linear algebra over GF(p).

Everything works on numpy int arrays with entries reduced mod p.  Matrices
are rows-of-vectors; row spaces are canonicalized by reduced row echelon
form, whose byte serialization doubles as a dictionary key for subspaces.
"""

from __future__ import annotations

from itertools import combinations, product as _iproduct

import numpy as np


def rref(mat: np.ndarray, p: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reduced row echelon form and pivot columns.  Returns only the nonzero
    rows, so the row count equals the rank."""
    a = np.array(mat, dtype=np.int64) % p
    if a.ndim != 2:
        raise ValueError("matrix expected")
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        sub = np.nonzero(a[r:, c])[0]
        if sub.size == 0:
            continue
        pr = r + int(sub[0])
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        a[r] = (a[r] * pow(int(a[r, c]), -1, p)) % p
        for other in range(rows):
            if other != r and a[other, c]:
                a[other] = (a[other] - a[other, c] * a[r]) % p
        pivots.append(c)
        r += 1
    return a[:r], tuple(pivots)


def rank(mat: np.ndarray, p: int) -> int:
    return rref(mat, p)[0].shape[0]


def row_space_key(mat: np.ndarray, p: int, width: int) -> bytes:
    """Canonical key for the row space: rank, then the RREF bytes."""
    red, _ = rref(mat, p)
    return bytes([red.shape[0]]) + red.astype(np.uint8).tobytes() + bytes([width])


def subspaces(dim: int, k: int, p: int):
    """All k-dimensional subspaces of GF(p)^dim as RREF matrices, in a fixed
    order: pivot column choices lexicographically, then free entries
    lexicographically."""
    if k == 0:
        yield np.zeros((0, dim), dtype=np.int64)
        return
    if k > dim:
        return
    for pivots in combinations(range(dim), k):
        free: list[tuple[int, int]] = []
        pivset = set(pivots)
        for r, pc in enumerate(pivots):
            for c in range(pc + 1, dim):
                if c not in pivset:
                    free.append((r, c))
        base = np.zeros((k, dim), dtype=np.int64)
        for r, pc in enumerate(pivots):
            base[r, pc] = 1
        if not free:
            yield base.copy()
            continue
        for fill in _iproduct(range(p), repeat=len(free)):
            m = base.copy()
            for (r, c), v in zip(free, fill):
                m[r, c] = v
            yield m


def count_subspaces(dim: int, k: int, p: int) -> int:
    """Gaussian binomial coefficient."""
    if k < 0 or k > dim:
        return 0
    num = den = 1
    for i in range(k):
        num *= p ** (dim - i) - 1
        den *= p ** (i + 1) - 1
    return num // den
