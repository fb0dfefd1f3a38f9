"""Exact rational arithmetic helpers.

Every finite float is a dyadic rational, so converting to ``Fraction`` is
lossless and determinants of float matrices can be evaluated exactly.
"""
from fractions import Fraction
from math import lcm

import numpy as np


def as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def fraction_matrix(a):
    """Nested list of Fractions from an array-like of numbers."""
    return [[as_fraction(v) for v in row] for row in a]


def _bareiss(m):
    """Determinant of a square integer matrix (list of lists, modified)."""
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            mik = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - mik * row_k[j]) // prev
        prev = pivot
    return sign * m[n - 1][n - 1]


def exact_det(a):
    """Exact determinant of a square matrix of floats, ints or Fractions."""
    rows = fraction_matrix(a)
    n = len(rows)
    if n == 0:
        return Fraction(1)
    denom = 1
    for row in rows:
        for v in row:
            denom = lcm(denom, v.denominator)
    ints = [[v.numerator * (denom // v.denominator) for v in row] for row in rows]
    return Fraction(_bareiss(ints), denom**n)


def orientation(points):
    """Sign of det[p_1 - p_0, ..., p_n - p_0] for n+1 points in R^n, exactly."""
    pts = fraction_matrix(points)
    base = pts[0]
    diff = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    d = exact_det(diff)
    return (d > 0) - (d < 0)

