"""Left-invariant differential operators as elements of the enveloping algebra.

An operator is stored in Poincare-Birkhoff-Witt normal form: a sparse map
from exponent vectors J to exact rationals, meaning sum c_J X_1^j1 ... X_N^jN.
Products are normal-ordered with the rewriting X_b X_a -> X_a X_b - [X_a, X_b]
(a < b), memoised per (generator, monomial).
"""
from __future__ import annotations

import weakref
from contextlib import contextmanager

from .lie import StratifiedLieAlgebra
from .scalars import Q, ZERO, q_str, to_q

DEFAULT_DEGREE_CAP = 16


class DegreeCapExceeded(ArithmeticError):
    pass


class EnvelopingAlgebra:
    """PBW multiplication table for one stratified algebra."""

    def __init__(self, alg: StratifiedLieAlgebra, degree_cap: int = DEFAULT_DEGREE_CAP):
        self.lie = alg
        self.n = alg.dim
        self.weights = alg.layers
        self.degree_cap = degree_cap
        self._left: dict = {}
        self._mono: dict = {}
        self._unit = (0,) * self.n

    @contextmanager
    def raised_cap(self, cap: int):
        """Temporarily allow products up to degree ``cap``."""
        old = self.degree_cap
        self.degree_cap = max(old, cap)
        try:
            yield self
        finally:
            self.degree_cap = old

    # -- monomial arithmetic --------------------------------------------------
    def left_mul(self, i: int, exps: tuple) -> dict:
        """X_i * X^exps in normal form."""
        key = (i, exps)
        hit = self._left.get(key)
        if hit is not None:
            return hit
        k = next((k for k in range(i) if exps[k]), None)
        if k is None:
            e = list(exps)
            e[i] += 1
            res = {tuple(e): Q(1)}
        else:
            rest = list(exps)
            rest[k] -= 1
            rest = tuple(rest)
            res = {}
            # X_i X_k Y = X_k (X_i Y) + [X_i, X_k] Y
            for m, c in self.left_mul(i, rest).items():
                for m2, c2 in self.left_mul(k, m).items():
                    res[m2] = res.get(m2, ZERO) + c * c2
            for ell, v in self.lie.bracket_basis(i, k).items():
                for m, c in self.left_mul(ell, rest).items():
                    res[m] = res.get(m, ZERO) + v * c
            res = {m: c for m, c in res.items() if c != 0}
        self._left[key] = res
        return res

    def mono_mul(self, a: tuple, b: tuple) -> dict:
        key = (a, b)
        hit = self._mono.get(key)
        if hit is not None:
            return hit
        last_a = max((i for i in range(self.n) if a[i]), default=-1)
        first_b = next((i for i in range(self.n) if b[i]), self.n)
        if last_a <= first_b:
            res = {tuple(x + y for x, y in zip(a, b)): Q(1)}
        else:
            cur = {b: Q(1)}
            for i in range(self.n - 1, -1, -1):
                for _ in range(a[i]):
                    nxt: dict = {}
                    for m, c in cur.items():
                        for m2, c2 in self.left_mul(i, m).items():
                            nxt[m2] = nxt.get(m2, ZERO) + c * c2
                    cur = {m: c for m, c in nxt.items() if c != 0}
            res = cur
        if len(self._mono) < 500_000:
            self._mono[key] = res
        return res

    def weight(self, exps: tuple) -> int:
        return sum(w * e for w, e in zip(self.weights, exps))

    # -- constructors ------------------------------------------------------------
    def zero(self) -> "EnvelopingOperator":
        return EnvelopingOperator(self, {})

    def one(self) -> "EnvelopingOperator":
        return EnvelopingOperator(self, {self._unit: Q(1)})

    def scalar(self, c) -> "EnvelopingOperator":
        c = to_q(c)
        return EnvelopingOperator(self, {self._unit: c} if c != 0 else {})

    def gen(self, i: int) -> "EnvelopingOperator":
        e = [0] * self.n
        e[i] = 1
        return EnvelopingOperator(self, {tuple(e): Q(1)})

    def word(self, word, coeff=1) -> "EnvelopingOperator":
        """PBW normal form of coeff * X_{w0} X_{w1} ... X_{wk}."""
        cur = {self._unit: to_q(coeff)}
        if cur[self._unit] == 0:
            return self.zero()
        for i in reversed(tuple(word)):
            nxt: dict = {}
            for m, c in cur.items():
                for m2, c2 in self.left_mul(i, m).items():
                    nxt[m2] = nxt.get(m2, ZERO) + c * c2
            cur = {m: c for m, c in nxt.items() if c != 0}
        return EnvelopingOperator(self, cur)

    def from_words(self, words: dict) -> "EnvelopingOperator":
        out = self.zero()
        for w, c in words.items():
            out = out + self.word(w, c)
        return out

    def parse(self, text: str) -> "EnvelopingOperator":
        """Parse expressions such as ``-X1^2*X2 + 3/2*X3 - (X1*X2+X3)*X2``."""
        return _Parser(self, text).parse()


_ENVELOPING: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def enveloping(alg: StratifiedLieAlgebra) -> EnvelopingAlgebra:
    env = _ENVELOPING.get(alg)
    if env is None:
        env = EnvelopingAlgebra(alg)
        _ENVELOPING[alg] = env
    return env


def pbw_normal_form(alg: StratifiedLieAlgebra, word, coeff=1) -> "EnvelopingOperator":
    return enveloping(alg).word(word, coeff)


class EnvelopingOperator:
    """Immutable element of the enveloping algebra in PBW normal form."""

    __slots__ = ("env", "terms")

    def __init__(self, env: EnvelopingAlgebra, terms: dict):
        self.env = env
        self.terms = terms

    # -- arithmetic ------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, EnvelopingOperator):
            other = self.env.scalar(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, ZERO) + c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return EnvelopingOperator(self.env, out)

    __radd__ = __add__

    def __neg__(self):
        return EnvelopingOperator(self.env, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "EnvelopingOperator":
        c = to_q(c)
        if c == 0:
            return self.env.zero()
        return EnvelopingOperator(self.env, {m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, EnvelopingOperator):
            return self.scale(other)
        if not self.terms or not other.terms:
            return self.env.zero()
        env = self.env
        if self.degree() + other.degree() > env.degree_cap:
            raise DegreeCapExceeded(
                f"product degree {self.degree() + other.degree()} exceeds cap {env.degree_cap}"
            )
        out: dict = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                cab = ca * cb
                for m, c in env.mono_mul(a, b).items():
                    out[m] = out.get(m, ZERO) + cab * c
        return EnvelopingOperator(env, {m: c for m, c in out.items() if c != 0})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        out = self.env.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, EnvelopingOperator):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # -- queries -----------------------------------------------------------------
    def degree(self) -> int:
        """Largest homogeneous degree d(J) among the terms (-1 for zero)."""
        return max((self.env.weight(m) for m in self.terms), default=-1)

    def degrees(self) -> set:
        return {self.env.weight(m) for m in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def order(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def words(self):
        """Yield (letter word, coefficient) with X^J spelled as X_1..X_1 X_2..X_N."""
        for m, c in self.terms.items():
            word = tuple(i for i, e in enumerate(m) for _ in range(e))
            yield word, c

    def adjoint(self) -> "EnvelopingOperator":
        """Formal L2 adjoint: each field is skew-adjoint (Haar measure = Lebesgue)."""
        out = self.env.zero()
        for word, c in self.words():
            sign = -1 if len(word) % 2 else 1
            out = out + self.env.word(tuple(reversed(word)), sign * c)
        return out

    def commutator(self, other) -> "EnvelopingOperator":
        return self * other - other * self

    def horizontal_words(self) -> dict:
        """Rewrite every letter through iterated brackets of horizontal letters."""
        exp = self.env.lie.horizontal_expansions
        out: dict = {}
        for word, c in self.words():
            cur = {(): c}
            for letter in word:
                nxt: dict = {}
                for w, a in cur.items():
                    for w2, b in exp[letter].items():
                        nxt[w + w2] = nxt.get(w + w2, ZERO) + a * b
                cur = nxt
            for w, a in cur.items():
                out[w] = out.get(w, ZERO) + a
        return {w: a for w, a in out.items() if a != 0}

    def horizontalize(self) -> "EnvelopingOperator":
        """Normal form of the horizontal rewriting (equal to self by construction)."""
        return self.env.from_words(self.horizontal_words())

    # -- presentation ------------------------------------------------------------
    def _sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (-self.env.weight(t[0]), [-e for e in t[0]]))

    def __str__(self):
        return format_terms(self._sorted_terms(), _mono_text) or "0"

    def __repr__(self):
        return f"EnvelopingOperator({self})"

    def latex(self) -> str:
        return format_terms(self._sorted_terms(), _mono_latex, latex=True) or "0"

    def to_json(self) -> list:
        return [{"exponents": list(m), "coefficient": q_str(c)} for m, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, env: EnvelopingAlgebra, data: list) -> "EnvelopingOperator":
        return EnvelopingOperator(
            env, {tuple(t["exponents"]): to_q(t["coefficient"]) for t in data if to_q(t["coefficient"]) != 0}
        )


def _mono_text(m) -> str:
    parts = []
    for i, e in enumerate(m):
        if e == 1:
            parts.append(f"X{i + 1}")
        elif e > 1:
            parts.append(f"X{i + 1}^{e}")
    return "*".join(parts)


def _mono_latex(m) -> str:
    parts = []
    for i, e in enumerate(m):
        if e == 1:
            parts.append(f"X_{{{i + 1}}}")
        elif e > 1:
            parts.append(f"X_{{{i + 1}}}^{{{e}}}")
    return "".join(parts)


def format_terms(items, mono_fmt, latex: bool = False) -> str:
    out = ""
    for m, c in items:
        mono = mono_fmt(m)
        neg = c < 0
        a = -c if neg else c
        if mono:
            if a == 1:
                body = mono
            elif latex:
                body = (rf"\frac{{{a.numerator}}}{{{a.denominator}}}" if a.denominator != 1 else str(a.numerator)) + mono
            else:
                body = f"{q_str(a)}*{mono}"
        else:
            body = (rf"\frac{{{a.numerator}}}{{{a.denominator}}}" if latex and a.denominator != 1 else q_str(a))
        if not out:
            out = ("-" if neg else "") + body
        else:
            out += (" - " if neg else " + ") + body
    return out


class _Parser:
    """Recursive-descent parser for operator expressions in X1..XN."""

    def __init__(self, env: EnvelopingAlgebra, text: str):
        import re

        self.env = env
        self.tokens = re.findall(r"X\d+|\d+/\d+|\d+|[-+*^()]", text.replace(" ", ""))
        joined = "".join(self.tokens)
        if joined != text.replace(" ", ""):
            raise ValueError(f"cannot parse operator {text!r}")
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self):
        out = self.expr()
        if self.peek() is not None:
            raise ValueError(f"unexpected token {self.peek()!r}")
        return out

    def expr(self):
        sign = 1
        if self.peek() in "+-" and self.peek() is not None:
            sign = -1 if self.take() == "-" else 1
        out = self.term().scale(sign)
        while self.peek() in ("+", "-"):
            op = self.take()
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self):
        out = self.factor()
        while True:
            tok = self.peek()
            if tok == "*":
                self.take()
                out = out * self.factor()
            elif tok is not None and (tok.startswith("X") or tok == "(" or tok[0].isdigit()):
                out = out * self.factor()
            else:
                return out

    def factor(self):
        tok = self.take()
        if tok is None:
            raise ValueError("unexpected end of operator expression")
        if tok == "(":
            base = self.expr()
            if self.take() != ")":
                raise ValueError("missing ')'")
        elif tok.startswith("X"):
            i = int(tok[1:]) - 1
            if not 0 <= i < self.env.n:
                raise ValueError(f"no generator {tok}")
            base = self.env.gen(i)
        elif tok[0].isdigit():
            base = self.env.scalar(to_q(tok))
        else:
            raise ValueError(f"unexpected token {tok!r}")
        if self.peek() == "^":
            self.take()
            base = base ** int(self.take())
        return base


class DimensionMismatch(ValueError):
    pass


class OperatorMatrix:
    """Rectangular matrix of EnvelopingOperators.

    ``row_weights`` / ``col_weights`` record the weight of each basis form of
    the target / source bundle; ``degree`` is the form degree of the source.
    """

    def __init__(self, env: EnvelopingAlgebra, entries, row_weights=None, col_weights=None,
                 ncols: int | None = None, name: str = ""):
        self.env = env
        self.entries = [list(r) for r in entries]
        self.nrows = len(self.entries)
        self.ncols = len(self.entries[0]) if self.entries else (ncols or 0)
        if any(len(r) != self.ncols for r in self.entries):
            raise DimensionMismatch("ragged operator matrix")
        self.row_weights = tuple(row_weights) if row_weights is not None else None
        self.col_weights = tuple(col_weights) if col_weights is not None else None
        self.name = name

    @classmethod
    def zeros(cls, env, nrows, ncols, row_weights=None, col_weights=None):
        return cls(env, [[env.zero() for _ in range(ncols)] for _ in range(nrows)],
                   row_weights, col_weights, ncols)

    @classmethod
    def identity(cls, env, n, weights=None):
        out = cls.zeros(env, n, n, weights, weights)
        for i in range(n):
            out.entries[i][i] = env.one()
        return out

    @classmethod
    def from_scalars(cls, env, rows, row_weights=None, col_weights=None, ncols=None):
        return cls(env, [[env.scalar(v) for v in r] for r in rows], row_weights, col_weights, ncols)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def _like(self, entries):
        return OperatorMatrix(self.env, entries, self.row_weights, self.col_weights, self.ncols)

    def __add__(self, other: "OperatorMatrix"):
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} + {other.shape}")
        return self._like([[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __neg__(self):
        return self._like([[-a for a in r] for r in self.entries])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return self._like([[a.scale(c) for a in r] for r in self.entries])

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for r, s in zip(self.entries, other.entries) for a, b in zip(r, s)
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return not any(a for r in self.entries for a in r)

    def nonzero(self):
        return [(i, j, a) for i, r in enumerate(self.entries) for j, a in enumerate(r) if a]

    def transpose(self) -> "OperatorMatrix":
        return OperatorMatrix(self.env, [[self.entries[i][j] for i in range(self.nrows)] for j in range(self.ncols)],
                              self.col_weights, self.row_weights, self.nrows)

    def adjoint(self) -> "OperatorMatrix":
        t = self.transpose()
        return t._like([[a.adjoint() for a in r] for r in t.entries])

    def max_degree(self) -> int:
        return max((a.degree() for r in self.entries for a in r), default=-1)

    def degree_pattern(self) -> list[list]:
        """Homogeneous degree of each entry (None for zero, -1 for inhomogeneous)."""
        out = []
        for r in self.entries:
            row = []
            for a in r:
                if not a:
                    row.append(None)
                elif a.is_homogeneous():
                    row.append(a.degree())
                else:
                    row.append(-1)
            out.append(row)
        return out

    def is_weight_homogeneous(self) -> bool:
        """Entry (i, j) homogeneous of degree row_weight_i - col_weight_j, zero if negative."""
        if self.row_weights is None or self.col_weights is None:
            raise ValueError("weights not recorded")
        for i, r in enumerate(self.entries):
            for j, a in enumerate(r):
                if a and a.degrees() != {self.row_weights[i] - self.col_weights[j]}:
                    return False
        return True

    def __str__(self):
        return "\n".join("[" + ", ".join(str(a) for a in r) + "]" for r in self.entries) or "[]"

    def latex(self) -> str:
        if not self.entries or not self.ncols:
            return r"\begin{pmatrix}\end{pmatrix}"
        body = r" \\ ".join(" & ".join(a.latex() for a in r) for r in self.entries)
        return r"\begin{pmatrix} " + body + r" \end{pmatrix}"

    def to_json(self) -> dict:
        return {
            "rows": self.nrows,
            "cols": self.ncols,
            "rowWeights": list(self.row_weights) if self.row_weights is not None else None,
            "colWeights": list(self.col_weights) if self.col_weights is not None else None,
            "entries": [[a.to_json() for a in r] for r in self.entries],
            "text": [[str(a) for a in r] for r in self.entries],
        }

    @classmethod
    def from_json(cls, env, data: dict) -> "OperatorMatrix":
        return cls(env, [[EnvelopingOperator.from_json(env, a) for a in r] for r in data["entries"]],
                   data.get("rowWeights"), data.get("colWeights"), data["cols"])


def compose(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """Matrix product a . b with PBW-normalised entries."""
    if a.ncols != b.nrows:
        raise DimensionMismatch(f"cannot compose {a.shape} with {b.shape}")
    env = a.env
    entries = []
    for i in range(a.nrows):
        row = []
        for j in range(b.ncols):
            acc = env.zero()
            for k in range(a.ncols):
                x, y = a.entries[i][k], b.entries[k][j]
                if x and y:
                    acc = acc + x * y
            row.append(acc)
        entries.append(row)
    return OperatorMatrix(env, entries, a.row_weights, b.col_weights, b.ncols)


def commutator(p: EnvelopingOperator, q: EnvelopingOperator) -> EnvelopingOperator:
    return p * q - q * p


def formal_adjoint(p: EnvelopingOperator) -> EnvelopingOperator:
    return p.adjoint()


def adjoint_matrix(a: OperatorMatrix) -> OperatorMatrix:
    return a.adjoint()


def horizontalize(p: EnvelopingOperator) -> EnvelopingOperator:
    return p.horizontalize()
