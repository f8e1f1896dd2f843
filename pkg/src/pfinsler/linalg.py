"""Small dense linear algebra over generic scalars (floats, arrays or jets).

Matrices are nested lists.  Dimensions here are at most 4, so the adjugate
formula is cheap and needs no pivoting, which jets could not do anyway.
"""

from __future__ import annotations

import numpy as np


def quad(m, u, w):
    n = len(u)
    total = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            row = row + m[i][j] * w[j]
        total = total + u[i] * row
    return total


def matvec(m, u):
    return [sum((m[i][j] * u[j] for j in range(1, len(u))), m[i][0] * u[0]) for i in range(len(m))]


def dot(a, b):
    return sum((a[i] * b[i] for i in range(1, len(a))), a[0] * b[0])


def _minor(m, i, j):
    return [row[:j] + row[j + 1 :] for k, row in enumerate(m) if k != i]


def det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0.0
    for j in range(n):
        term = m[0][j] * det(_minor(m, 0, j))
        total = total + term if j % 2 == 0 else total - term
    return total


def inv(m):
    n = len(m)
    d = det(m)
    if n == 1:
        return [[1.0 / d]]
    rd = 1.0 / d
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            c = det(_minor(m, j, i))
            out[i][j] = c * rd if (i + j) % 2 == 0 else -c * rd
    return out


def to_array(m) -> np.ndarray:
    return np.array([[np.asarray(e, float) for e in row] for row in m])
