"""Weight-graded exterior algebra of the dual of a stratified Lie algebra.

Covector basis elements are sorted 0-based index tuples; theta_i has the
weight of the layer of X_i.  The frame theta_1..theta_N is orthonormal and
theta_1 ^ ... ^ theta_N is the positive volume form.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

from .enveloping import EnvelopingAlgebra, OperatorMatrix, enveloping
from .lie import StratifiedLieAlgebra
from .linalg import matmul, transpose
from .scalars import Q, ZERO, to_q
from .scalars import _latex_q


class DegreeOverflow(ValueError):
    pass


def merge_sign(a: tuple, b: tuple) -> int:
    """Sign of the permutation sorting a + b (0 if they share an index)."""
    if set(a) & set(b):
        return 0
    inversions = sum(1 for x in a for y in b if x > y)
    return -1 if inversions % 2 else 1


def complement(index_set: tuple, n: int) -> tuple:
    s = set(index_set)
    return tuple(i for i in range(n) if i not in s)


def basis_label(index_set: tuple) -> str:
    if not index_set:
        return "1"
    return "^".join(f"th{i + 1}" for i in index_set)


def basis_latex(index_set: tuple) -> str:
    if not index_set:
        return "1"
    return r"\wedge ".join(rf"\theta_{{{i + 1}}}" for i in index_set)


@dataclass(frozen=True)
class Multivector:
    """Homogeneous h-covector as a sparse map {index tuple: coefficient}."""

    degree: int
    terms: dict

    def __post_init__(self):
        clean = {}
        for k, v in self.terms.items():
            k = tuple(k)
            if len(k) != self.degree:
                raise ValueError(f"key {k} has degree {len(k)}, expected {self.degree}")
            if list(k) != sorted(set(k)):
                raise ValueError(f"key {k} must be strictly increasing")
            v = to_q(v)
            if v != 0:
                clean[k] = v
        object.__setattr__(self, "terms", clean)

    @classmethod
    def basis(cls, *indices) -> "Multivector":
        """theta_{i1} ^ ... ^ theta_{ih} for 0-based indices in any order."""
        s = 1
        idx = list(indices)
        for i in range(len(idx)):
            for j in range(i + 1, len(idx)):
                if idx[i] == idx[j]:
                    return cls(len(idx), {})
                if idx[i] > idx[j]:
                    s = -s
        return cls(len(idx), {tuple(sorted(idx)): Q(s)})

    def __add__(self, other: "Multivector") -> "Multivector":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, ZERO) + v
        return Multivector(self.degree, out)

    def __neg__(self):
        return Multivector(self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Multivector":
        c = to_q(c)
        return Multivector(self.degree, {k: c * v for k, v in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, Multivector) and self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((self.degree, frozenset(self.terms.items())))

    def inner(self, other: "Multivector"):
        if other.degree != self.degree:
            return ZERO
        return sum((v * other.terms.get(k, ZERO) for k, v in self.terms.items()), ZERO)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{v}*{basis_label(k)}" for k, v in sorted(self.terms.items()))


def wedge(a: Multivector, b: Multivector, n: int | None = None) -> Multivector:
    if n is not None and a.degree + b.degree > n:
        raise DegreeOverflow(f"degree {a.degree + b.degree} exceeds {n}")
    out: dict = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            s = merge_sign(ka, kb)
            if s:
                k = tuple(sorted(ka + kb))
                out[k] = out.get(k, ZERO) + s * va * vb
    return Multivector(a.degree + b.degree, out)


def hodge_star(a: Multivector, n: int) -> Multivector:
    """theta_I -> sign(I, I^c) theta_{I^c}, so that theta_I ^ *theta_I = vol."""
    out = {}
    for k, v in a.terms.items():
        c = complement(k, n)
        out[c] = merge_sign(k, c) * v
    return Multivector(n - a.degree, out)


class AlgebraicMap:
    """Scalar matrix between canonical covector bases of two degrees.

    ``weight_offset`` is the declared shift (target weight - source weight)
    of every nonzero entry, or None when no block structure is declared.
    """

    def __init__(self, matrix, row_basis, col_basis, row_weights, col_weights,
                 weight_offset: int | None = 0, name: str = ""):
        self.matrix = [list(r) for r in matrix]
        self.row_basis = tuple(row_basis)
        self.col_basis = tuple(col_basis)
        self.row_weights = tuple(row_weights)
        self.col_weights = tuple(col_weights)
        self.weight_offset = weight_offset
        self.name = name

    @property
    def shape(self):
        return (len(self.row_basis), len(self.col_basis))

    def __matmul__(self, other: "AlgebraicMap") -> "AlgebraicMap":
        if self.shape[1] != other.shape[0]:
            raise ValueError("dimension mismatch")
        off = None
        if self.weight_offset is not None and other.weight_offset is not None:
            off = self.weight_offset + other.weight_offset
        return AlgebraicMap(matmul(self.matrix, other.matrix) if self.matrix else [],
                            self.row_basis, other.col_basis, self.row_weights, other.col_weights, off)

    def transpose(self) -> "AlgebraicMap":
        off = None if self.weight_offset is None else -self.weight_offset
        return AlgebraicMap(transpose(self.matrix, len(self.col_basis)), self.col_basis, self.row_basis,
                            self.col_weights, self.row_weights, off)

    def is_zero(self) -> bool:
        return all(v == 0 for r in self.matrix for v in r)

    def respects_weights(self) -> bool:
        if self.weight_offset is None:
            return True
        return all(
            v == 0 or self.row_weights[i] - self.col_weights[j] == self.weight_offset
            for i, r in enumerate(self.matrix) for j, v in enumerate(r)
        )

    def apply(self, a: Multivector) -> Multivector:
        col = {k: i for i, k in enumerate(self.col_basis)}
        out: dict = {}
        for k, v in a.terms.items():
            j = col[k]
            for i, r in enumerate(self.matrix):
                if r[j] != 0:
                    out[self.row_basis[i]] = out.get(self.row_basis[i], ZERO) + r[j] * v
        deg = len(self.row_basis[0]) if self.row_basis else 0
        return Multivector(deg, out)

    def latex(self) -> str:
        if not self.matrix or not self.col_basis:
            return r"\begin{pmatrix}\end{pmatrix}"
        body = r" \\ ".join(" & ".join(_latex_q(v) for v in r) for r in self.matrix)
        return r"\begin{pmatrix} " + body + r" \end{pmatrix}"


class ExteriorAlgebra:
    """Bases, d0, delta0, Hodge star and the full differential for one algebra."""

    def __init__(self, alg: StratifiedLieAlgebra):
        self.lie = alg
        self.n = alg.dim

    @cached_property
    def bases(self) -> list[tuple]:
        out = []
        for h in range(self.n + 1):
            lex = list(combinations(range(self.n), h))
            out.append(tuple(sorted(lex, key=self.weight)))  # stable sort keeps lex order
        return out

    def basis(self, h: int) -> tuple:
        return self.bases[h]

    @cached_property
    def _index(self) -> list[dict]:
        return [{k: i for i, k in enumerate(b)} for b in self.bases]

    def index(self, h: int, key: tuple) -> int:
        return self._index[h][key]

    def weight(self, key: tuple) -> int:
        return sum(self.lie.layers[i] for i in key)

    def weights(self, h: int) -> tuple:
        return tuple(self.weight(k) for k in self.bases[h])

    def weight_blocks(self, h: int) -> dict:
        blocks: dict = {}
        for i, k in enumerate(self.bases[h]):
            blocks.setdefault(self.weight(k), []).append(i)
        return blocks

    # -- Maurer-Cartan ---------------------------------------------------------
    @cached_property
    def d_theta(self) -> list[Multivector]:
        """d theta_k = -sum_{i<j} c^k_ij theta_i ^ theta_j."""
        out = [dict() for _ in range(self.n)]
        for (i, j), img in self.lie.brackets.items():
            for k, c in img.items():
                out[k][(i, j)] = out[k].get((i, j), ZERO) - c
        return [Multivector(2, t) for t in out]

    def d0_multivector(self, a: Multivector) -> Multivector:
        out = Multivector(a.degree + 1, {})
        for key, v in a.terms.items():
            for pos, k in enumerate(key):
                left = Multivector(pos, {key[:pos]: 1})
                right = Multivector(len(key) - pos - 1, {key[pos + 1:]: 1})
                term = wedge(wedge(left, self.d_theta[k]), right)
                out = out + term.scale(v if pos % 2 == 0 else -v)
        return out

    @cached_property
    def d0(self) -> list[AlgebraicMap]:
        """d0[h]: Lambda^h -> Lambda^(h+1), weight preserving (h = 0..N-1)."""
        maps = []
        for h in range(self.n):
            rows, cols = self.bases[h + 1], self.bases[h]
            mat = [[ZERO] * len(cols) for _ in rows]
            for j, key in enumerate(cols):
                for k2, v in self.d0_multivector(Multivector(h, {key: 1})).terms.items():
                    mat[self.index(h + 1, k2)][j] = v
            maps.append(AlgebraicMap(mat, rows, cols, self.weights(h + 1), self.weights(h), 0, f"d0^{h}"))
        return maps

    @cached_property
    def delta0(self) -> list[AlgebraicMap]:
        """delta0[h]: Lambda^h -> Lambda^(h-1) (h = 1..N; index 0 is None)."""
        return [None] + [m.transpose() for m in self.d0]

    def star_matrix(self, h: int) -> list[list]:
        """Matrix of * : Lambda^h -> Lambda^(N-h) in the canonical bases."""
        rows, cols = self.bases[self.n - h], self.bases[h]
        mat = [[ZERO] * len(cols) for _ in rows]
        for j, key in enumerate(cols):
            c = complement(key, self.n)
            mat[self.index(self.n - h, c)][j] = Q(merge_sign(key, c))
        return mat

    # -- full differential -------------------------------------------------------
    def full_d(self, env: EnvelopingAlgebra | None = None) -> list[OperatorMatrix]:
        """d[h]: Omega^h -> Omega^(h+1) as d0 plus first-order terms X_j theta_j ^ ."""
        env = env or enveloping(self.lie)
        out = []
        for h in range(self.n):
            rows, cols = self.bases[h + 1], self.bases[h]
            d0 = self.d0[h].matrix
            entries = [[env.scalar(d0[i][j]) for j in range(len(cols))] for i in range(len(rows))]
            for j, key in enumerate(cols):
                for g in range(self.n):
                    s = merge_sign((g,), key)
                    if s:
                        i = self.index(h + 1, tuple(sorted((g,) + key)))
                        entries[i][j] = entries[i][j] + env.gen(g).scale(s)
            out.append(OperatorMatrix(env, entries, self.weights(h + 1), self.weights(h), len(cols), f"d^{h}"))
        return out

    def split_d(self, env: EnvelopingAlgebra | None = None) -> list[dict]:
        """Per degree, {ell: d_ell} with d_0 the algebraic part and d_ell using layer-ell fields."""
        out = []
        for d in self.full_d(env):
            parts: dict = {}
            for i, r in enumerate(d.entries):
                for j, a in enumerate(r):
                    for m, c in a.terms.items():
                        ell = d.env.weight(m)
                        part = parts.setdefault(ell, OperatorMatrix.zeros(d.env, d.nrows, d.ncols, d.row_weights, d.col_weights))
                        part.entries[i][j] = part.entries[i][j] + type(a)(d.env, {m: c})
            out.append(parts)
        return out

    def basis_latex(self, h: int) -> list[str]:
        return [basis_latex(k) for k in self.bases[h]]


def build_d0(alg: StratifiedLieAlgebra) -> list[AlgebraicMap]:
    return ExteriorAlgebra(alg).d0


def build_delta0(alg: StratifiedLieAlgebra) -> list[AlgebraicMap]:
    return ExteriorAlgebra(alg).delta0


def build_full_d(group) -> list[OperatorMatrix]:
    """Accepts a GroupModel or a StratifiedLieAlgebra."""
    alg = getattr(group, "algebra", group)
    return ExteriorAlgebra(alg).full_d()
