"""Exact linear algebra over the integers and rationals.

Two independent routes are provided: a batched fraction-free (Bareiss)
elimination on integer arrays for testing many small column subsets at once,
and a plain Gauss-Jordan reduction over :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

# int64 products in a Bareiss step must stay below this
_INT64_SAFE = 2**62


def _minor_bound(max_abs: int, size: int) -> int:
    # Hadamard: |det| <= (sqrt(size) * max_abs) ** size
    return math.isqrt(size**size) * max_abs**size + 1 if size else 1


def full_column_rank_batch(mats: np.ndarray) -> np.ndarray:
    """For a stack of integer matrices of shape ``(N, m, c)``, report which
    have rank ``c``.

    Uses fraction-free elimination, so every intermediate entry is a minor of
    the input and the arithmetic is exact. Falls back to Python integers when
    the minors could overflow ``int64``.
    """
    mats = np.asarray(mats)
    if mats.ndim != 3:
        raise ValueError("expected an (N, m, c) array")
    num, m, c = mats.shape
    if num == 0:
        return np.zeros(0, dtype=bool)
    if c == 0:
        return np.ones(num, dtype=bool)
    if m < c:
        return np.zeros(num, dtype=bool)
    max_abs = int(np.abs(mats).max()) if mats.size else 0
    bound = _minor_bound(max_abs, c)
    if bound * bound * 2 < _INT64_SAFE:
        work = mats.astype(np.int64, copy=True)
    else:
        work = mats.astype(object, copy=True)
    ok = np.ones(num, dtype=bool)
    prev = np.ones(num, dtype=work.dtype)
    idx = np.arange(num)
    for p in range(c):
        nz = work[:, p:, p] != 0
        has = nz.any(axis=1)
        ok &= has
        work[~ok] = 0
        piv = np.argmax(nz, axis=1) + p
        top = work[idx, p].copy()
        work[idx, p] = work[idx, piv]
        work[idx, piv] = top
        pv = work[:, p, p].copy()
        pv[~ok] = 1
        if p + 1 < c:
            lower = work[:, p + 1:, p + 1:]
            num_ = pv[:, None, None] * lower - work[:, p + 1:, p:p + 1] * work[:, p:p + 1, p + 1:]
            work[:, p + 1:, p + 1:] = num_ // prev[:, None, None]
        work[:, p + 1:, p] = 0
        prev = pv
    return ok


def rref(matrix: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; returns ``(rows, pivot_columns)``."""
    rows = [[Fraction(v) for v in r] for r in matrix]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(matrix: Sequence[Sequence]) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right kernel, one vector per free column."""
    if ncols is None:
        ncols = len(matrix[0]) if len(matrix) else 0
    if not len(matrix):
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    reduced, pivots = rref(matrix)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            vec[pc] = -row[free]
        basis.append(vec)
    return basis


def primitive_integer_vector(vec: Sequence[Fraction]) -> list[int]:
    """Scale a rational vector to coprime integers with a positive leading entry."""
    den = 1
    for v in vec:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g:
        ints = [v // g for v in ints]
    lead = next((v for v in ints if v), 0)
    if lead < 0:
        ints = [-v for v in ints]
    return ints
