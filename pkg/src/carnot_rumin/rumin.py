"""Rumin complex: E0 spaces, the projection onto E, d_c, delta_c and Laplacians.

Everything is computed in exact rationals on the internal E0 bases, which
are orthogonal but not normalised (their squared norms are kept as a Gram
vector).  Square roots appear only when presenting matrices in the
orthonormal basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from . import linalg
from .enveloping import (
    DEFAULT_DEGREE_CAP,
    EnvelopingAlgebra,
    EnvelopingOperator,
    OperatorMatrix,
    compose,
)
from .exterior import ExteriorAlgebra, Multivector
from .lie import StratifiedLieAlgebra
from .scalars import Q, ZERO, Surd, _squarefree_split, q_str

IDENTITY_DEGREE_CAP = 24


class ContractViolation(RuntimeError):
    """A postcondition of the projection onto E failed; indicates a construction bug."""

    def __init__(self, identity: str, degree: int, residual: OperatorMatrix):
        super().__init__(f"{identity} fails in degree {degree}")
        self.identity = identity
        self.degree = degree
        self.residual = residual


@dataclass(frozen=True)
class RuminBasis:
    """Orthogonal bases of E0^h as coordinate vectors in the canonical covector bases."""

    vectors: tuple  # vectors[h][i]: list of mpq, length C(N, h)
    weights: tuple  # weights[h][i]
    gram: tuple  # gram[h][i] = |xi_i|^2
    canonical: tuple  # canonical[h]: covector index tuples

    @property
    def dims(self) -> tuple:
        return tuple(len(v) for v in self.vectors)

    def multivectors(self, h: int) -> list[Multivector]:
        keys = self.canonical[h]
        return [Multivector(h, {k: c for k, c in zip(keys, vec) if c != 0}) for vec in self.vectors[h]]

    def scale_factors(self, h: int) -> list[Surd]:
        """|xi_i| as exact surds."""
        return [Surd.sqrt(g) for g in self.gram[h]]

    def pure_weight(self, h: int) -> int | None:
        ws = set(self.weights[h])
        return ws.pop() if len(ws) == 1 else None


def compute_E0(ext: ExteriorAlgebra) -> RuminBasis:
    """Ker d0 intersected with Ker delta0, weight block by weight block."""
    vectors, weights, gram = [], [], []
    n = ext.n
    for h in range(n + 1):
        dim = len(ext.basis(h))
        vecs, ws = [], []
        for w, idx in sorted(ext.weight_blocks(h).items()):
            rows = []
            if h < n:
                rows += [[r[j] for j in idx] for r in ext.d0[h].matrix]
            if h > 0:
                rows += [[r[j] for j in idx] for r in ext.delta0[h].matrix]
            rows = [r for r in rows if any(v != 0 for v in r)]
            local = linalg.nullspace(rows, len(idx))
            for v in linalg.gram_schmidt(local):
                full = [ZERO] * dim
                for j, c in zip(idx, v):
                    full[j] = c
                vecs.append(full)
                ws.append(w)
        vectors.append(tuple(tuple(v) for v in vecs))
        weights.append(tuple(ws))
        gram.append(tuple(linalg.dot(v, v) for v in vecs))
    return RuminBasis(tuple(vectors), tuple(weights), tuple(gram), tuple(ext.bases))


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


class RuminComplex:
    """Rumin complex of a stratified algebra (immutable once built; all parts lazy)."""

    def __init__(self, alg: StratifiedLieAlgebra, degree_cap: int = DEFAULT_DEGREE_CAP):
        self.lie = alg
        self.n = alg.dim
        self.ext = ExteriorAlgebra(alg)
        self.env = EnvelopingAlgebra(alg, degree_cap)

    # -- algebraic data --------------------------------------------------------
    @cached_property
    def basis(self) -> RuminBasis:
        return compute_E0(self.ext)

    @property
    def dims(self) -> tuple:
        return self.basis.dims

    def iota(self, h: int) -> list[list]:
        """Embedding E0^h -> Lambda^h (columns are basis vectors)."""
        vecs = self.basis.vectors[h]
        return [[vecs[i][r] for i in range(len(vecs))] for r in range(len(self.ext.basis(h)))]

    def restrict(self, h: int) -> list[list]:
        """Coordinates on E0^h of the orthogonal projection Lambda^h -> E0^h."""
        return [[c / g for c in vec] for vec, g in zip(self.basis.vectors[h], self.basis.gram[h])]

    def projection_E0(self, h: int) -> list[list]:
        return linalg.matmul(self.iota(h), self.restrict(h))

    @cached_property
    def d0_inverse(self) -> list[list[list]]:
        """Moore-Penrose inverse of d0[h] : Lambda^(h+1) -> Lambda^h."""
        out = []
        for h in range(self.n):
            m = self.ext.d0[h]
            out.append(linalg.pinv(m.matrix, *m.shape))
        return out

    def _scalars(self, rows, row_weights, col_weights, ncols=None) -> OperatorMatrix:
        return OperatorMatrix.from_scalars(self.env, rows, row_weights, col_weights, ncols)

    def _b(self, h: int) -> OperatorMatrix:
        """d0^{-1} on Omega^(h+1) -> Omega^h."""
        return self._scalars(self.d0_inverse[h], self.ext.weights(h), self.ext.weights(h + 1),
                             len(self.ext.basis(h + 1)))

    @cached_property
    def d(self) -> list[OperatorMatrix]:
        return self.ext.full_d(self.env)

    # -- projection onto E -------------------------------------------------------
    @cached_property
    def _neumann(self) -> list[OperatorMatrix]:
        """P_h = sum_k (-d0^{-1} (d - d0))^k on Omega^h; terminates since each factor raises weight."""
        out = []
        for h in range(self.n):
            d0 = self._scalars(self.ext.d0[h].matrix, self.ext.weights(h + 1), self.ext.weights(h),
                               len(self.ext.basis(h)))
            step = compose(self._b(h), self.d[h] - d0).scale(-1)
            dim = len(self.ext.basis(h))
            total = OperatorMatrix.identity(self.env, dim, self.ext.weights(h))
            term = total
            for _ in range(dim * self.lie.step + 1):
                term = compose(step, term)
                if term.is_zero():
                    break
                total = total + term
            else:
                raise RuntimeError("weight-raising series failed to terminate")
            out.append(total)
        return out

    @cached_property
    def Pi_E(self) -> list[OperatorMatrix]:
        """Pi_E = I - P b d - d P b on each degree (b = d0^{-1}, P the series above)."""
        out = []
        for h in range(self.n + 1):
            dim = len(self.ext.basis(h))
            pi = OperatorMatrix.identity(self.env, dim, self.ext.weights(h))
            if h < self.n:
                pi = pi - compose(self._neumann[h], compose(self._b(h), self.d[h]))
            if h > 0:
                pi = pi - compose(self.d[h - 1], compose(self._neumann[h - 1], self._b(h - 1)))
            out.append(pi)
        return out

    def contract_residuals(self) -> list[tuple[str, int, OperatorMatrix]]:
        """All contract identities as (name, degree, residual); residual zero means it holds."""
        res = []
        pi, d = self.Pi_E, self.d
        for h in range(self.n + 1):
            res.append(("Pi_E Pi_E = Pi_E", h, compose(pi[h], pi[h]) - pi[h]))
            if h < self.n:
                res.append(("d Pi_E = Pi_E d", h, compose(d[h], pi[h]) - compose(pi[h + 1], d[h])))
                res.append(("d0^-1 d Pi_E = 0", h, compose(self._b(h), compose(d[h], pi[h]))))
                res.append(("Pi_E d0^-1 = 0", h, compose(pi[h], self._b(h))))
            if h > 0:
                res.append(("d0^-1 Pi_E = 0", h, compose(self._b(h - 1), pi[h])))
                res.append(("Pi_E d d0^-1 = 0", h, compose(pi[h], compose(d[h - 1], self._b(h - 1)))))
            dim = self.dims[h]
            r = self._scalars(self.restrict(h), self.basis.weights[h], self.ext.weights(h),
                              len(self.ext.basis(h)))
            i = self._scalars(self.iota(h), self.ext.weights(h), self.basis.weights[h], dim)
            ident = OperatorMatrix.identity(self.env, dim, self.basis.weights[h])
            res.append(("Pi_E0 Pi_E iota = id", h, compose(r, compose(pi[h], i)) - ident))
        return res

    def verify_contract(self) -> None:
        for name, h, residual in self.contract_residuals():
            if not residual.is_zero():
                raise ContractViolation(name, h, residual)

    # -- d_c and delta_c ---------------------------------------------------------
    @cached_property
    def d_c(self) -> list[OperatorMatrix]:
        """d_c[h] : E0^h -> E0^(h+1) in the internal orthogonal bases."""
        out = []
        for h in range(self.n):
            r = self._scalars(self.restrict(h + 1), self.basis.weights[h + 1], self.ext.weights(h + 1),
                              len(self.ext.basis(h + 1)))
            i = self._scalars(self.iota(h), self.ext.weights(h), self.basis.weights[h], self.dims[h])
            m = compose(r, compose(self.d[h], compose(self.Pi_E[h], i)))
            m.name = f"d_c^{h}"
            out.append(m)
        return out

    def star(self, h: int) -> list[list]:
        """Hodge star E0^h -> E0^(N-h) in the internal bases."""
        s = self.ext.star_matrix(h)
        return linalg.matmul(self.restrict(self.n - h), linalg.matmul(s, self.iota(h)))

    def star_preserves_E0(self, h: int) -> bool:
        """*E0^h lies inside E0^(N-h)."""
        image = linalg.matmul(self.ext.star_matrix(h), self.iota(h))
        back = linalg.matmul(self.projection_E0(self.n - h), image)
        return back == image

    def hodge_sign(self, h: int) -> int:
        """delta_c = (-1)^(N(h+1)+1) * d_c * on h-forms."""
        return _sign(self.n * (h + 1) + 1)

    @cached_property
    def delta_c(self) -> list[OperatorMatrix | None]:
        """delta_c[h] : E0^h -> E0^(h-1) (index 0 unused)."""
        out: list = [None]
        n = self.n
        for h in range(1, n + 1):
            s_in = self._scalars(self.star(h), self.basis.weights[n - h], self.basis.weights[h], self.dims[h])
            s_out = self._scalars(self.star(n - h + 1), self.basis.weights[h - 1], self.basis.weights[n - h + 1],
                                  self.dims[n - h + 1])
            m = compose(s_out, compose(self.d_c[n - h], s_in)).scale(self.hodge_sign(h))
            m.name = f"delta_c^{h}"
            out.append(m)
        return out

    def delta_c_from_adjoint(self, h: int) -> OperatorMatrix:
        """Formal L2 adjoint of d_c[h-1] with respect to the Gram metrics."""
        adj = self.d_c[h - 1].adjoint()
        g_in = [[g if i == j else ZERO for j, _ in enumerate(self.basis.gram[h])] for i, g in enumerate(self.basis.gram[h])]
        g_out = [[1 / g if i == j else ZERO for j, _ in enumerate(self.basis.gram[h - 1])]
                 for i, g in enumerate(self.basis.gram[h - 1])]
        left = self._scalars(g_out, self.basis.weights[h - 1], self.basis.weights[h - 1], self.dims[h - 1])
        right = self._scalars(g_in, self.basis.weights[h], self.basis.weights[h], self.dims[h])
        return compose(left, compose(adj, right))

    # -- orders and Laplacians -------------------------------------------------
    def d_c_orders(self, h: int) -> set:
        return set().union(*(a.degrees() for _, _, a in self.d_c[h].nonzero()))

    @cached_property
    def orders(self) -> tuple:
        """Homogeneous order of d_c on each E0^h; ValueError if some degree mixes orders."""
        out = []
        for h in range(self.n):
            degs = self.d_c_orders(h)
            if len(degs) != 1:
                raise ValueError(f"d_c on degree {h} is not of a single homogeneous order: {sorted(degs)}")
            out.append(degs.pop())
        return tuple(out)

    @cached_property
    def laplacian_exponents(self) -> tuple:
        """(a_h, b_h): Delta_h = (d_c delta_c)^a_h + (delta_c d_c)^b_h, balanced to a common order."""
        o = self.orders
        out = []
        for h in range(self.n + 1):
            if h == 0:
                out.append((0, 1))
            elif h == self.n:
                out.append((1, 0))
            else:
                lcm = o[h - 1] * o[h] // math.gcd(o[h - 1], o[h])
                out.append((lcm // o[h - 1], lcm // o[h]))
        return tuple(out)

    def d_delta(self, h: int) -> OperatorMatrix:
        """d_c delta_c on E0^h (zero on functions)."""
        if h == 0:
            return OperatorMatrix.zeros(self.env, 1, 1, self.basis.weights[0], self.basis.weights[0])
        return compose(self.d_c[h - 1], self.delta_c[h])

    def delta_d(self, h: int) -> OperatorMatrix:
        """delta_c d_c on E0^h (zero on top forms)."""
        if h == self.n:
            return OperatorMatrix.zeros(self.env, self.dims[h], self.dims[h], self.basis.weights[h],
                                        self.basis.weights[h])
        return compose(self.delta_c[h + 1], self.d_c[h])

    @staticmethod
    def power(m: OperatorMatrix, k: int) -> OperatorMatrix:
        out = OperatorMatrix.identity(m.env, m.nrows, m.row_weights)
        for _ in range(k):
            out = compose(m, out)
        return out

    @cached_property
    def laplacians(self) -> list[OperatorMatrix]:
        out = []
        for h, (a, b) in enumerate(self.laplacian_exponents):
            dim = self.dims[h]
            lap = OperatorMatrix.zeros(self.env, dim, dim, self.basis.weights[h], self.basis.weights[h])
            if a:
                lap = lap + self.power(self.d_delta(h), a)
            if b:
                lap = lap + self.power(self.delta_d(h), b)
            lap.name = f"Delta_{h}"
            out.append(lap)
        return out

    @cached_property
    def laplacian_orders(self) -> tuple:
        return tuple(lap.max_degree() for lap in self.laplacians)

    def laplacian_formula(self, h: int) -> str:
        a, b = self.laplacian_exponents[h]
        parts = []
        if a:
            parts.append("d_c delta_c" if a == 1 else f"(d_c delta_c)^{a}")
        if b:
            parts.append("delta_c d_c" if b == 1 else f"(delta_c d_c)^{b}")
        return " + ".join(parts)

    # -- orthonormal presentation -------------------------------------------------
    def orthonormal(self, m: OperatorMatrix, source: int, target: int) -> "RadicalMatrix":
        """Entry (i, j) rescaled by sqrt(g_target_i / g_source_j)."""
        g_out, g_in = self.basis.gram[target], self.basis.gram[source]
        entries = [[RadicalOperator.scaled(a, Surd.sqrt(g_out[i] / g_in[j])) for j, a in enumerate(r)]
                   for i, r in enumerate(m.entries)]
        return RadicalMatrix(self.env, entries, m.ncols)

    def d_c_orthonormal(self, h: int) -> "RadicalMatrix":
        return self.orthonormal(self.d_c[h], h, h + 1)

    def delta_c_orthonormal(self, h: int) -> "RadicalMatrix":
        return self.orthonormal(self.delta_c[h], h, h - 1)

    def laplacian_orthonormal(self, h: int) -> "RadicalMatrix":
        return self.orthonormal(self.laplacians[h], h, h)

    def metadata(self) -> dict:
        return {
            "dims": list(self.dims),
            "weights": [list(w) for w in self.basis.weights],
            "gram": [[q_str(g) for g in gs] for gs in self.basis.gram],
            "deltaSigns": {str(h): self.hodge_sign(h) for h in range(1, self.n + 1)},
        }


def compute_Pi_E(cx: RuminComplex, check: bool = True) -> list[OperatorMatrix]:
    if check:
        cx.verify_contract()
    return cx.Pi_E


def compute_d_c(cx: RuminComplex) -> list[OperatorMatrix]:
    return cx.d_c


def compute_delta_c(cx: RuminComplex) -> list:
    return cx.delta_c


def compute_laplacians(cx: RuminComplex) -> list[OperatorMatrix]:
    return cx.laplacians


# -- radical presentation ----------------------------------------------------------

class RadicalOperator:
    """Element sum_r sqrt(r) * P_r with r squarefree; exact in Q(sqrt 2, sqrt 3, ...)."""

    __slots__ = ("env", "parts")

    def __init__(self, env: EnvelopingAlgebra, parts: dict):
        self.env = env
        self.parts = {r: p for r, p in parts.items() if p}

    @classmethod
    def scaled(cls, op: EnvelopingOperator, s: Surd) -> "RadicalOperator":
        return cls(op.env, {s.radicand: op.scale(s.coeff)})

    @classmethod
    def rational(cls, op: EnvelopingOperator) -> "RadicalOperator":
        return cls(op.env, {1: op})

    def __add__(self, other: "RadicalOperator") -> "RadicalOperator":
        out = dict(self.parts)
        for r, p in other.parts.items():
            out[r] = out[r] + p if r in out else p
        return RadicalOperator(self.env, out)

    def __neg__(self):
        return RadicalOperator(self.env, {r: -p for r, p in self.parts.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "RadicalOperator") -> "RadicalOperator":
        out: dict = {}
        for r1, p1 in self.parts.items():
            for r2, p2 in other.parts.items():
                a, b = _squarefree_split(r1 * r2)
                term = (p1 * p2).scale(a)
                out[b] = out[b] + term if b in out else term
        return RadicalOperator(self.env, out)

    def scale_surd(self, s: Surd) -> "RadicalOperator":
        return self * RadicalOperator(self.env, {s.radicand: self.env.scalar(s.coeff)})

    def __eq__(self, other):
        return isinstance(other, RadicalOperator) and (self - other).is_zero()

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.parts

    def degrees(self) -> set:
        return set().union(*(p.degrees() for p in self.parts.values())) if self.parts else set()

    def is_rational(self) -> bool:
        return set(self.parts) <= {1}

    def rational_part(self) -> EnvelopingOperator:
        return self.parts.get(1, self.env.zero())

    def __str__(self):
        if not self.parts:
            return "0"
        out = []
        for r in sorted(self.parts):
            body = str(self.parts[r])
            out.append(body if r == 1 else f"sqrt({r})*({body})")
        return " + ".join(out)

    def latex(self) -> str:
        if not self.parts:
            return "0"
        out = []
        for r in sorted(self.parts):
            body = self.parts[r].latex()
            out.append(body if r == 1 else rf"\sqrt{{{r}}}\left({body}\right)")
        return " + ".join(out)

    def to_json(self) -> list:
        return [{"sqrt": r, "operator": self.parts[r].to_json()} for r in sorted(self.parts)]


class RadicalMatrix:
    def __init__(self, env, entries, ncols: int):
        self.env = env
        self.entries = [list(r) for r in entries]
        self.nrows = len(self.entries)
        self.ncols = ncols

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __matmul__(self, other: "RadicalMatrix") -> "RadicalMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"cannot compose {self.shape} with {other.shape}")
        zero = RadicalOperator(self.env, {})
        entries = []
        for i in range(self.nrows):
            row = []
            for j in range(other.ncols):
                acc = zero
                for k in range(self.ncols):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
                row.append(acc)
            entries.append(row)
        return RadicalMatrix(self.env, entries, other.ncols)

    def __sub__(self, other):
        return RadicalMatrix(self.env, [[a - b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)],
                             self.ncols)

    def __eq__(self, other):
        return isinstance(other, RadicalMatrix) and self.shape == other.shape and (self - other).is_zero()

    __hash__ = None

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self.entries for a in r)

    def degree_pattern(self) -> list[list]:
        out = []
        for r in self.entries:
            row = []
            for a in r:
                d = a.degrees()
                row.append(None if not d else (d.pop() if len(d) == 1 else -1))
            out.append(row)
        return out

    def __str__(self):
        return "\n".join("[" + ", ".join(str(a) for a in r) + "]" for r in self.entries)

    def latex(self) -> str:
        if not self.entries or not self.ncols:
            return r"\begin{pmatrix}\end{pmatrix}"
        return r"\begin{pmatrix} " + r" \\ ".join(" & ".join(a.latex() for a in r) for r in self.entries) + r" \end{pmatrix}"

    def to_json(self) -> dict:
        return {"rows": self.nrows, "cols": self.ncols,
                "entries": [[a.to_json() for a in r] for r in self.entries],
                "text": [[str(a) for a in r] for r in self.entries]}
