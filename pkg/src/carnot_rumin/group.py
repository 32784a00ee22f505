"""Group law, dilations and left-invariant coordinate fields of a Carnot group."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

from sympy.polys.domains import QQ
from sympy.polys.rings import ring

from .lie import StratifiedLieAlgebra
from .scalars import Q, ZERO, q_str, to_q

BCH = "bch"
ORDERED = "ordered"
CONVENTIONS = (BCH, ORDERED)


@lru_cache(maxsize=None)
def bch_word_coefficients(step: int) -> tuple:
    """Coefficients of log(exp(a) exp(b)) on words in {0: a, 1: b} up to length ``step``.

    Returned already divided by the word length, ready for the
    Dynkin-Specht-Wever map w -> [[..[w1, w2], ..], wn].
    """
    def mul(p, r):
        out: dict = {}
        for w1, c1 in p.items():
            for w2, c2 in r.items():
                w = w1 + w2
                if len(w) <= step:
                    out[w] = out.get(w, ZERO) + c1 * c2
        return {w: c for w, c in out.items() if c != 0}

    def exp_letter(letter):
        return {(letter,) * n: Q(1, math.factorial(n)) for n in range(step + 1)}

    prod = mul(exp_letter(0), exp_letter(1))
    u = {w: c for w, c in prod.items() if w}  # exp(a)exp(b) - 1
    log: dict = {}
    power = {(): Q(1)}
    for n in range(1, step + 1):
        power = mul(power, u)
        for w, c in power.items():
            log[w] = log.get(w, ZERO) + Q((-1) ** (n + 1), n) * c
    return tuple(sorted((w, c / len(w)) for w, c in log.items() if c != 0 and w))


def bch(alg: StratifiedLieAlgebra, a: list, b: list, zero) -> list:
    """log(exp(a) exp(b)) for coefficient vectors over any commutative ring."""
    cache: dict = {}

    def left_normed(word):
        if word in cache:
            return cache[word]
        if len(word) == 1:
            val = a if word[0] == 0 else b
        else:
            val = alg.bracket(left_normed(word[:-1]), a if word[-1] == 0 else b, zero)
        cache[word] = val
        return val

    out = [zero] * alg.dim
    for word, c in bch_word_coefficients(alg.step):
        if len(word) > 1 and word[0] == word[1]:
            continue  # [x, x] = 0
        vec = left_normed(word)
        for k in range(alg.dim):
            if vec[k] != 0:
                out[k] = out[k] + vec[k] * QQ(int(c.numerator), int(c.denominator))
    return out


def substitute(poly, images, target_ring):
    """Evaluate ``poly`` at the given polynomials of ``target_ring``."""
    out = target_ring.zero
    powers: dict = {}
    for monom, coeff in poly.terms():
        term = target_ring(coeff)
        for var, e in enumerate(monom):
            if e:
                key = (var, e)
                if key not in powers:
                    powers[key] = images[var] ** e
                term = term * powers[key]
        out += term
    return out


def eval_poly(poly, point):
    """Exact evaluation at rational (mpq) or float points."""
    total = 0
    for monom, coeff in poly.terms():
        term = coeff
        for var, e in enumerate(monom):
            if e:
                term = term * point[var] ** e
        total = total + term
    return total


@dataclass(frozen=True, eq=False)
class GroupModel:
    """Exponential-coordinate model of the group of a stratified algebra.

    ``convention`` is ``"bch"`` (x = exp(sum x_i X_i)) or ``"ordered"``
    (x = exp(x_s0 X_s0) ... exp(x_sN X_sN) with ``factor_order`` = s).
    """

    algebra: StratifiedLieAlgebra
    convention: str = ORDERED
    factor_order: tuple | None = None

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unsupported convention {self.convention!r}")
        if self.convention == ORDERED:
            order = self.factor_order
            if order is None:
                order = tuple(reversed(range(self.algebra.dim)))
            if sorted(order) != list(range(self.algebra.dim)):
                raise ValueError("factor_order must be a permutation of the basis")
            object.__setattr__(self, "factor_order", tuple(order))
        else:
            object.__setattr__(self, "factor_order", None)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def dilation_exponents(self) -> tuple[int, ...]:
        return self.algebra.layers

    @property
    def homogeneous_dimension(self) -> int:
        return self.algebra.homogeneous_dimension

    @cached_property
    def ring(self):
        n = self.dim
        names = ",".join(f"x{i + 1}" for i in range(n))
        return ring(names, QQ)[0]

    @cached_property
    def pair_ring(self):
        n = self.dim
        names = ",".join([f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)])
        return ring(names, QQ)[0]

    # -- coordinates of the first and second kind -------------------------
    @cached_property
    def _to_first_kind(self) -> list:
        """Polynomial map from this model's coordinates to BCH coordinates."""
        R = self.ring
        gens = R.gens
        if self.convention == BCH:
            return list(gens)
        z = [R.zero] * self.dim
        for k in self.factor_order:
            step = [R.zero] * self.dim
            step[k] = gens[k]
            z = bch(self.algebra, z, step, R.zero)
        return z

    @cached_property
    def _from_first_kind(self) -> list:
        if self.convention == BCH:
            return list(self.ring.gens)
        R = self.ring
        phi = self._to_first_kind
        psi = [None] * self.dim
        # phi_k = x_k + f_k(lower layers): solve layer by layer
        for ell in range(1, self.algebra.step + 1):
            ks = [k for k in range(self.dim) if self.algebra.layers[k] == ell]
            lower = [psi[i] if psi[i] is not None else R.zero for i in range(self.dim)]
            for k in ks:
                rest = phi[k] - R.gens[k]
                psi[k] = R.gens[k] - substitute(rest, lower, R)
        return psi

    @cached_property
    def law(self) -> list:
        """(x.y)_k as polynomials in x1..xN, y1..yN."""
        R2 = self.pair_ring
        n = self.dim
        xs, ys = R2.gens[:n], R2.gens[n:]
        a = [substitute(p, xs, R2) for p in self._to_first_kind]
        b = [substitute(p, ys, R2) for p in self._to_first_kind]
        z = bch(self.algebra, a, b, R2.zero)
        return [substitute(p, z, R2) for p in self._from_first_kind]

    @cached_property
    def fields(self) -> list[list]:
        """fields[i][j]: coefficient of d/dx_j in the left-invariant field X_i."""
        R, R2 = self.ring, self.pair_ring
        n = self.dim
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                d = self.law[j].diff(R2.gens[n + i])
                terms = {m[:n]: c for m, c in d.terms() if not any(m[n:])}
                row.append(R.from_dict(terms) if terms else R.zero)
            out.append(row)
        return out

    # -- evaluation ---------------------------------------------------------
    def multiply(self, x, y) -> list:
        point = [to_q(v) for v in x] + [to_q(v) for v in y]
        return [Q(eval_poly(p, point)) for p in self.law]

    def inverse(self, x) -> list:
        R = self.ring
        z = [Q(-eval_poly(p, [to_q(v) for v in x])) for p in self._to_first_kind]
        return [Q(eval_poly(p, z)) for p in self._from_first_kind]

    def apply_field(self, i: int, f):
        """X_i f for f in ``self.ring``."""
        out = self.ring.zero
        for j, a in enumerate(self.fields[i]):
            if a:
                out += a * f.diff(self.ring.gens[j])
        return out

    def apply_word(self, word, f):
        """X_{w0} X_{w1} ... X_{wk} f (rightmost letter acts first)."""
        for i in reversed(word):
            f = self.apply_field(i, f)
            if not f:
                break
        return f

    def apply_operator(self, op, f):
        """Apply an EnvelopingOperator or {word: coeff} map to f through coordinate fields."""
        out = self.ring.zero
        items = op.words() if hasattr(op, "words") else op.items()
        for word, c in items:
            out += QQ(int(c.numerator), int(c.denominator)) * self.apply_word(word, f)
        return out

    def dilate(self, lam, x) -> list:
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        return [lam ** d * v for d, v in zip(self.dilation_exponents, x)]

    def homogeneous_norm(self, x) -> float:
        """(sum |x_i|^(2 k!/d_i))^(1/(2 k!)), k the step."""
        big = 2 * math.factorial(self.algebra.step)
        total = sum(abs(float(v)) ** (big // d) for d, v in zip(self.dilation_exponents, x))
        return total ** (1.0 / big)

    def field_string(self, i: int) -> str:
        parts = []
        for j, a in enumerate(self.fields[i]):
            if a:
                parts.append(f"({a.as_expr()})*d{j + 1}" if a != 1 else f"d{j + 1}")
        return " + ".join(parts) or "0"

    def to_json(self) -> dict:
        def poly_json(p):
            return [
                {"exponents": list(m), "coefficient": q_str(to_q(c))} for m, c in sorted(p.terms())
            ]

        return {
            "algebra": self.algebra.to_json(),
            "coordinateConvention": self.convention,
            "factorOrder": None if self.factor_order is None else [k + 1 for k in self.factor_order],
            "dilationExponents": list(self.dilation_exponents),
            "Q": self.homogeneous_dimension,
            "groupLaw": [poly_json(p) for p in self.law],
            "groupLawText": [str(p.as_expr()) for p in self.law],
            "leftInvariantFields": [
                {"field": f"X{i + 1}", "text": self.field_string(i),
                 "coefficients": [poly_json(a) for a in self.fields[i]]}
                for i in range(self.dim)
            ],
        }


def build_group_model(alg: StratifiedLieAlgebra, convention: str = ORDERED, factor_order=None) -> GroupModel:
    """The default ordered convention (factor order N, ..., 1) reproduces the reference Cartan fields."""
    return GroupModel(alg, convention, factor_order)
