"""Brute-force reference implementations, written independently of the package.

Nothing here imports from ``quasimet``; tests compare the library against these.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import permutations


def T(d, x, y, z):
    return d[x][y] + d[y][z] - d[x][z]


def is_quasimetric(d):
    n = len(d)
    if any(d[i][i] != 0 for i in range(n)):
        return False
    if any(d[i][j] <= 0 for i in range(n) for j in range(n) if i != j):
        return False
    return all(d[i][k] <= d[i][j] + d[j][k] for i in range(n) for j in range(n) for k in range(n))


def preserves_T(d1, d2, perm):
    n = len(d1)
    return all(
        T(d1, x, y, z) == T(d2, perm[x], perm[y], perm[z])
        for x in range(n) for y in range(n) for z in range(n)
    )


def extended_group(d):
    n = len(d)
    return sorted(p for p in permutations(range(n)) if preserves_T(d, d, p))


def isometries(d):
    n = len(d)
    return sorted(
        p for p in permutations(range(n))
        if all(d[p[i]][p[j]] == d[i][j] for i in range(n) for j in range(n))
    )


def floyd_warshall(n, edges):
    INF = None
    D = [[INF] * n for _ in range(n)]
    for i in range(n):
        D[i][i] = Fraction(0)
    for u, v, w in edges:
        if u != v and (D[u][v] is None or w < D[u][v]):
            D[u][v] = w
    for k in range(n):
        for i in range(n):
            if D[i][k] is None:
                continue
            for j in range(n):
                if D[k][j] is None:
                    continue
                c = D[i][k] + D[k][j]
                if D[i][j] is None or c < D[i][j]:
                    D[i][j] = c
    return D


def random_quasimetric(rng: random.Random, n: int, denom: int = 4, lo: int = 1, hi: int = 12):
    """Shortest-path closure of random positive rationals is always a quasi-metric."""
    w = [[Fraction(rng.randint(lo, hi), rng.randint(1, denom)) if i != j else Fraction(0) for j in range(n)]
         for i in range(n)]
    edges = [(i, j, w[i][j]) for i in range(n) for j in range(n) if i != j]
    return floyd_warshall(n, edges)


def shifted(d, f):
    """``d(x, y) + f(y) - f(x)``; a quasi-metric when the result stays positive."""
    n = len(d)
    return [[d[x][y] + f[y] - f[x] for y in range(n)] for x in range(n)]


def random_symmetric(rng: random.Random, n: int, values=(1, 2, 3)):
    """Symmetric quasi-metric by closure; small value sets make symmetries likely."""
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = Fraction(rng.choice(values))
    edges = [(i, j, w[i][j]) for i in range(n) for j in range(n) if i != j]
    return floyd_warshall(n, edges)


def euclid_fundamental():
    return [[1.0, 0.0], [0.0, 1.0]]


def randers_F(h, w, v):
    return math.sqrt(sum(v[i] * h[i][j] * v[j] for i in range(2) for j in range(2))) + w[0] * v[0] + w[1] * v[1]


def averaged_metric_isotropic(c):
    """Closed form for F = c|v| with the unit ball normalized to area one.

    Indicatrix u(t) = e(t)/c, area pi/c^2, so the volume form is
    (c^2/pi) dx^dy and its contraction with (u, u') is (c^2/pi)(1/c^2) = 1/pi.
    With g_u = c^2 I the integral over t in [0, 2pi] is 2 c^2 I.
    """
    return [[2 * c * c, 0.0], [0.0, 2 * c * c]]
