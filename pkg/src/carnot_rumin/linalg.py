"""Exact rational linear algebra on small dense matrices.

Matrices travel as lists of rows of ``mpq``; the heavy lifting (rref,
null spaces, pseudo-inverses) is delegated to ``sympy.Matrix``.
"""
from __future__ import annotations

import sympy

from .scalars import Q, ZERO, to_q


def to_sympy(rows, ncols: int | None = None) -> sympy.Matrix:
    rows = list(rows)
    if not rows:
        return sympy.zeros(0, ncols or 0)
    return sympy.Matrix(
        [[sympy.Rational(int(v.numerator), int(v.denominator)) for v in map(Q, r)] for r in rows]
    )


def from_sympy(m: sympy.Matrix) -> list[list]:
    return [[to_q(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]


def zeros(nrows: int, ncols: int) -> list[list]:
    return [[ZERO] * ncols for _ in range(nrows)]


def identity(n: int) -> list[list]:
    return [[Q(1) if i == j else ZERO for j in range(n)] for i in range(n)]


def matmul(a, b) -> list[list]:
    if not a:
        return []
    inner = len(b)
    ncols = len(b[0]) if b else 0
    out = zeros(len(a), ncols)
    for i, row in enumerate(a):
        orow = out[i]
        for k in range(inner):
            aik = row[k]
            if aik == 0:
                continue
            bk = b[k]
            for j in range(ncols):
                if bk[j] != 0:
                    orow[j] += aik * bk[j]
    return out


def transpose(a, nrows: int | None = None) -> list[list]:
    if not a:
        return [[] for _ in range(nrows or 0)]
    return [list(col) for col in zip(*a)]


def nullspace(rows, ncols: int) -> list[list]:
    """Basis of the null space in rref pivot order, scaled to primitive integer vectors."""
    if not rows:
        return [[Q(1) if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    vecs = []
    for v in to_sympy(rows).nullspace():
        vec = [to_q(x) for x in v]
        vecs.append(primitive(vec))
    return vecs


def primitive(vec: list) -> list:
    """Rescale a rational vector to coprime integers with positive leading entry."""
    import math

    den = 1
    for x in vec:
        den = den * int(x.denominator) // math.gcd(den, int(x.denominator))
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g == 0:
        return vec
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        g = -g
    return [Q(x, g) for x in ints]


def rank(rows) -> int:
    if not rows:
        return 0
    return to_sympy(rows).rank()


def pinv(rows, nrows: int, ncols: int) -> list[list]:
    """Exact Moore-Penrose pseudo-inverse (shape ncols x nrows)."""
    if nrows == 0 or ncols == 0:
        return zeros(ncols, nrows)
    m = to_sympy(rows)
    if all(x == 0 for x in m):
        return zeros(ncols, nrows)
    return from_sympy(m.pinv())


def solve(columns: list[list], target: list) -> list | None:
    """Coefficients c with sum_j c_j columns[j] == target, or None if inconsistent."""
    if not columns:
        return [] if all(t == 0 for t in target) else None
    a = to_sympy(transpose(columns))
    b = to_sympy([[t] for t in target])
    try:
        sol, params = a.gauss_jordan_solve(b)
    except ValueError:
        return None
    sol = sol.subs({p: 0 for p in params})
    return [to_q(x) for x in sol]


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), ZERO)


def gram_schmidt(vectors: list[list]) -> list[list]:
    """Orthogonalise without normalising; norms stay rational."""
    out: list[list] = []
    for v in vectors:
        w = list(v)
        for u in out:
            c = dot(w, u) / dot(u, u)
            if c != 0:
                w = [a - c * b for a, b in zip(w, u)]
        if any(x != 0 for x in w):
            out.append(primitive(w))
    return out
