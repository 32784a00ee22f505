"""Independent reference computations used by the tests.

Nothing here calls the package's BCH, PBW or projection code: each oracle
re-derives its answer from first principles with sympy or plain Python.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

import sympy


# -- free Lie algebras: Lyndon words ---------------------------------------------------

def lyndon_words(m: int, max_len: int) -> list[tuple]:
    """Duval's algorithm over the alphabet 0..m-1."""
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        n = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - n])
        while w and w[-1] == m - 1:
            w.pop()
    return [x for x in out if len(x) <= max_len]


def lyndon_counts(m: int, step: int) -> list[int]:
    counts = [0] * step
    for w in lyndon_words(m, step):
        counts[len(w) - 1] += 1
    return counts


# -- truncated tensor algebra representation ------------------------------------------

class TensorRep:
    """Left multiplication on T(R^m) truncated above ``step``, a faithful
    strictly triangular representation of the free nilpotent algebra."""

    def __init__(self, m: int, step: int):
        self.m, self.step = m, step
        self.words = [w for k in range(step + 1) for w in itertools.product(range(m), repeat=k)]
        self.index = {w: i for i, w in enumerate(self.words)}
        self.size = len(self.words)

    def left_mult(self, poly: dict) -> sympy.Matrix:
        """Matrix of v -> poly * v for poly = {word: coeff}."""
        mat = sympy.zeros(self.size, self.size)
        for col, w in enumerate(self.words):
            for u, c in poly.items():
                uw = tuple(u) + w
                if len(uw) <= self.step:
                    mat[self.index[uw], col] += sympy.Rational(c)
        return mat

    @staticmethod
    def expm_nilpotent(a: sympy.Matrix) -> sympy.Matrix:
        out = sympy.eye(a.shape[0])
        term = sympy.eye(a.shape[0])
        k = 1
        while True:
            term = term * a / k
            if term.is_zero_matrix:
                return out
            out += term
            k += 1


def nc_bracket(a: dict, b: dict) -> dict:
    out: dict = {}
    for u, x in a.items():
        for v, y in b.items():
            out[u + v] = out.get(u + v, 0) + x * y
            out[v + u] = out.get(v + u, 0) - x * y
    return {w: c for w, c in out.items() if c != 0}


def basis_images(alg, rep: TensorRep) -> list[sympy.Matrix]:
    """rho(X_k) for every basis element, from the horizontal expansions."""
    return [rep.left_mult({w: Fraction(int(c.numerator), int(c.denominator)) for w, c in e.items()})
            for e in alg.horizontal_expansions]


def random_rational(rng: random.Random, span: int = 5) -> Fraction:
    return Fraction(rng.randint(-span * 4, span * 4), rng.randint(1, 4))


# -- naive noncommutative rewriting ----------------------------------------------------

def naive_pbw(alg, word: tuple, rng: random.Random) -> dict:
    """Sort a word into PBW order by random adjacent swaps X_a X_b -> X_b X_a + [X_a, X_b]."""
    todo = {tuple(word): Fraction(1)}
    done: dict = {}
    while todo:
        w, c = todo.popitem()
        if c == 0:
            continue
        inversions = [p for p in range(len(w) - 1) if w[p] > w[p + 1]]
        if not inversions:
            done[w] = done.get(w, 0) + c
            continue
        p = rng.choice(inversions)
        a, b = w[p], w[p + 1]
        swapped = w[:p] + (b, a) + w[p + 2:]
        todo[swapped] = todo.get(swapped, 0) + c
        for k, v in alg.bracket_basis(a, b).items():
            nw = w[:p] + (k,) + w[p + 2:]
            todo[nw] = todo.get(nw, 0) + c * Fraction(int(v.numerator), int(v.denominator))
    out = {}
    for w, c in done.items():
        if c:
            exps = [0] * alg.dim
            for i in w:
                exps[i] += 1
            out[tuple(exps)] = c
    return out
