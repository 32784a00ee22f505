"""Commutators with multiplication operators, and Sobolev/Poincare exponent bookkeeping."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations

from .enveloping import EnvelopingOperator, OperatorMatrix
from .group import GroupModel
from .rumin import RuminComplex
from .scalars import Q, q_str, to_q


class PolyCoefOperator:
    """sum_J a_J(x) X^J with polynomial coefficients a_J (PBW monomials X^J)."""

    def __init__(self, group: GroupModel, terms: dict | None = None):
        self.group = group
        self.terms = {m: p for m, p in (terms or {}).items() if p}

    def add_term(self, op: EnvelopingOperator, coef) -> None:
        for m, c in op.terms.items():
            p = self.terms.get(m, self.group.ring.zero) + coef * _qq(c)
            if p:
                self.terms[m] = p
            else:
                self.terms.pop(m, None)

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def degrees(self, weights) -> set:
        return {sum(w * e for w, e in zip(weights, m)) for m in self.terms}

    def coefficients_constant(self) -> bool:
        return all(p.is_ground for p in self.terms.values())

    def apply(self, u):
        out = self.group.ring.zero
        for m, p in self.terms.items():
            word = tuple(i for i, e in enumerate(m) for _ in range(e))
            out += p * self.group.apply_word(word, u)
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, p in sorted(self.terms.items()):
            mono = "*".join(f"X{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(m) if e) or "1"
            parts.append(f"({p.as_expr()})*{mono}")
        return " + ".join(parts)


def _qq(c):
    from sympy.polys.domains import QQ

    return QQ(int(c.numerator), int(c.denominator))


@dataclass
class LeibnizDecomposition:
    """groups[k][i][j]: part of [P, zeta] (entry i, j) carrying k-th derivatives of zeta."""

    groups: dict
    shape: tuple
    orders: dict = field(default_factory=dict)  # operator order m for each entry
    horizontal: bool = True

    def apply(self, u_components: list) -> list:
        nrows, ncols = self.shape
        out = [None] * nrows
        for i in range(nrows):
            acc = None
            for k, grid in self.groups.items():
                for j in range(ncols):
                    v = grid[i][j].apply(u_components[j])
                    acc = v if acc is None else acc + v
            out[i] = acc
        return out

    def nonzero_groups(self) -> list[int]:
        return sorted(k for k, grid in self.groups.items() if any(not e.is_zero() for r in grid for e in r))


def _entry_words(op: EnvelopingOperator, horizontal: bool):
    return op.horizontal_words().items() if horizontal else op.words()


def leibniz_commutator(p, zeta, group: GroupModel, horizontal: bool = True) -> LeibnizDecomposition:
    """[P, zeta] = sum_k P_(m-k)(X^k zeta), via the Leibniz rule on each word.

    For a word X_w, X_w(zeta u) = sum over subsequences S of (X_{w_S} zeta)(X_{w minus S} u);
    the k = |S| terms form group k.  With ``horizontal`` the entries are first
    rewritten in horizontal letters, so group k only sees k-th horizontal
    derivatives of zeta and has homogeneous order m - k.
    """
    if isinstance(p, EnvelopingOperator):
        entries = [[p]]
    elif isinstance(p, OperatorMatrix):
        entries = p.entries
    else:
        raise TypeError("expected an EnvelopingOperator or OperatorMatrix")
    if not hasattr(zeta, "diff"):
        raise TypeError("zeta must be a polynomial of the group model's ring")
    env = entries[0][0].env if entries and entries[0] else None
    nrows, ncols = len(entries), len(entries[0]) if entries else 0
    groups: dict = {}
    orders: dict = {}
    deriv_cache: dict = {}

    def deriv(word):
        if word not in deriv_cache:
            deriv_cache[word] = group.apply_word(word, zeta)
        return deriv_cache[word]

    for i, row in enumerate(entries):
        for j, op in enumerate(row):
            if not op:
                continue
            orders[(i, j)] = op.degree()
            for word, c in _entry_words(op, horizontal):
                m = len(word)
                for k in range(1, m + 1):
                    for pos in combinations(range(m), k):
                        coef = deriv(tuple(word[t] for t in pos))
                        if not coef:
                            continue
                        rest = tuple(word[t] for t in range(m) if t not in pos)
                        grid = groups.setdefault(k, [[PolyCoefOperator(group) for _ in range(ncols)]
                                                     for _ in range(nrows)])
                        grid[i][j].add_term(env.word(rest), coef * _qq(c))
    return LeibnizDecomposition(groups, (nrows, ncols), orders, horizontal)


def commutator_direct(p: OperatorMatrix, zeta, u_components: list, group: GroupModel) -> list:
    """P(zeta u) - zeta P(u), computed through the coordinate fields."""
    out = []
    for row in p.entries:
        acc = group.ring.zero
        for op, u in zip(row, u_components):
            if op:
                acc += group.apply_operator(op, zeta * u) - zeta * group.apply_operator(op, u)
        out.append(acc)
    return out


# -- structural checks ------------------------------------------------------------

@dataclass
class LeibnizCheck:
    case: str
    degree: int
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"case": self.case, "degree": self.degree, "passed": self.passed, "detail": self.detail}


@dataclass
class LeibnizReport:
    checks: list = field(default_factory=list)
    probes: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"passed": self.passed, "probes": self.probes, "checks": [c.to_json() for c in self.checks]}


def random_polynomial(group: GroupModel, rng: random.Random, max_degree: int = 4, terms: int = 4):
    """Random polynomial with small integer coefficients and total degree <= max_degree."""
    R = group.ring
    out = R.zero
    n = group.dim
    for _ in range(terms):
        mono = R.one
        for _ in range(rng.randint(0, max_degree)):
            mono *= R.gens[rng.randrange(n)]
        out += rng.randint(-3, 3) * mono
    return out


def homogeneous_polynomial(group: GroupModel, degree: int, rng: random.Random, terms: int = 3):
    """Random polynomial of a single homogeneous degree under the dilations."""
    R = group.ring
    weights = group.dilation_exponents
    monos = []

    def build(start, remaining, exps):
        if remaining == 0:
            monos.append(tuple(exps))
            return
        for i in range(start, len(weights)):
            if weights[i] <= remaining:
                exps[i] += 1
                build(i, remaining - weights[i], exps)
                exps[i] -= 1

    build(0, degree, [0] * len(weights))
    out = R.zero
    for _ in range(terms):
        out += rng.randint(1, 4) * R.from_dict({rng.choice(monos): 1})
    return out


def leibniz_cases(cx: RuminComplex) -> list[tuple[str, int, OperatorMatrix]]:
    """[d_c, .] and [delta_c, .] on every degree and [d_c delta_c, .] on degrees 1..N."""
    cases = []
    for h in range(cx.n):
        cases.append(("d_c", h, cx.d_c[h]))
    for h in range(1, cx.n + 1):
        cases.append(("delta_c", h, cx.delta_c[h]))
    for h in range(1, cx.n + 1):
        cases.append(("d_c delta_c", h, cx.d_delta(h)))
    return cases


def _check_structure(name, h, op, dec: LeibnizDecomposition, weights) -> list[str]:
    """Order bounds: group k has order m - k for each order m present in the entry, 1 <= k <= max m."""
    problems = []
    m = op.max_degree()
    for k, grid in dec.groups.items():
        if not 1 <= k <= m:
            problems.append(f"group {k} outside 1..{m}")
        for i, row in enumerate(grid):
            for j, e in enumerate(row):
                if e.is_zero():
                    continue
                # a non-homogeneous entry splits into one order per homogeneous piece
                allowed = {d - k for d in op.entries[i][j].degrees()}
                if not e.degrees(weights) <= allowed:
                    problems.append(f"group {k} entry ({i},{j}) has orders {sorted(e.degrees(weights))}, "
                                    f"expected within {sorted(allowed)}")
    return problems


def check_leibniz_structure(cx: RuminComplex, group: GroupModel, probes: int = 200, seed: int = 0,
                            cases=None) -> LeibnizReport:
    rng = random.Random(seed)
    report = LeibnizReport()
    weights = cx.lie.layers
    cases = cases if cases is not None else leibniz_cases(cx)

    # exactness against the direct commutator, spread over the cases
    per_case = max(1, probes // max(1, len(cases)))
    done = 0
    bad = []
    for name, h, op in cases:
        n_probe = per_case if done + per_case <= probes else max(0, probes - done)
        for _ in range(n_probe):
            zeta = random_polynomial(group, rng, 4)
            u = [random_polynomial(group, rng, 3, 3) for _ in range(op.ncols)]
            dec = leibniz_commutator(op, zeta, group)
            if dec.apply(u) != commutator_direct(op, zeta, u, group):
                bad.append(f"{name} on degree {h}")
            done += 1
    while done < probes:
        name, h, op = cases[rng.randrange(len(cases))]
        zeta = random_polynomial(group, rng, 4)
        u = [random_polynomial(group, rng, 3, 3) for _ in range(op.ncols)]
        if leibniz_commutator(op, zeta, group).apply(u) != commutator_direct(op, zeta, u, group):
            bad.append(f"{name} on degree {h}")
        done += 1
    report.probes = done
    report.checks.append(LeibnizCheck("[P, zeta] = sum of groups (random probes)", -1, not bad,
                                      f"{done} probes" + (f"; failures: {bad[:5]}" if bad else "")))

    for name, h, op in cases:
        m = op.max_degree()
        zeta = random_polynomial(group, rng, max(4, m), terms=6)
        dec = leibniz_commutator(op, zeta, group)
        problems = _check_structure(name, h, op, dec, weights)
        report.checks.append(LeibnizCheck(f"[{name}, zeta]: group k has order m-k, k <= {m}", h, not problems,
                                          "; ".join(problems[:3]) or f"groups {dec.nonzero_groups()}"))
        # annihilation probes: zeta homogeneous of degree D kills every group k > D,
        # and leaves constant coefficients in group D
        ann = []
        for degree in range(0, m + 1):
            z = homogeneous_polynomial(group, degree, rng)
            dz = leibniz_commutator(op, z, group)
            for k in dz.nonzero_groups():
                if k > degree:
                    ann.append(f"deg {degree} zeta leaves group {k}")
            if degree in dz.groups and not all(e.coefficients_constant() for r in dz.groups[degree] for e in r):
                ann.append(f"deg {degree} zeta gives nonconstant coefficients in group {degree}")
        report.checks.append(LeibnizCheck(f"[{name}, zeta]: annihilation probes", h, not ann,
                                          "; ".join(ann[:3]) or f"homogeneous zeta of degree 0..{m}"))
    return report


# -- exponents ------------------------------------------------------------------------

class ExponentRangeError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentTable:
    Q: int
    s: dict  # h -> order of d_c on E0^(h-1), h = 1..N
    r: dict  # h -> order of d_c on E0^h, h = 1..N-1
    M: tuple

    def q(self, h: int, p) -> Q:
        return poincare_exponent(self.Q, self.s[h], p, top=(h == max(self.s)))

    def l1_endpoints(self) -> dict:
        return {h: self.q(h, 1) for h in self.r}

    def to_json(self, p=None) -> dict:
        out = {
            "Q": self.Q,
            "s": {str(h): v for h, v in self.s.items()},
            "r": {str(h): v for h, v in self.r.items()},
            "M": list(self.M),
            "qAtP1": {str(h): q_str(v) for h, v in self.l1_endpoints().items()},
        }
        if p is not None:
            qs = {}
            for h in self.s:
                try:
                    qs[str(h)] = q_str(self.q(h, p))
                except ExponentRangeError as exc:
                    qs[str(h)] = f"undefined: {exc}"
            out["p"] = q_str(to_q(p))
            out["q"] = qs
        return out


def poincare_exponent(homogeneous_dim: int, s: int, p, top: bool = False) -> Q:
    """q with 1/q = 1/p - s/Q, i.e. q = pQ / (Q - s p)."""
    p = to_q(p)
    if p < 1:
        raise ExponentRangeError(f"p = {q_str(p)} < 1")
    if p == 1 and top:
        raise ExponentRangeError("no L1 endpoint on top-degree forms")
    if p * s >= homogeneous_dim:
        raise ExponentRangeError(f"p = {q_str(p)} must be < Q/s = {q_str(Q(homogeneous_dim, s))}")
    return p * homogeneous_dim / (homogeneous_dim - s * p)


def exponent_table(cx: RuminComplex) -> ExponentTable:
    o = cx.orders
    n = cx.n
    return ExponentTable(
        cx.lie.homogeneous_dimension,
        {h: o[h - 1] for h in range(1, n + 1)},
        {h: o[h] for h in range(1, n)},
        cx.laplacian_orders,
    )


def poincare_exponents(cx: RuminComplex, h: int, p) -> Q:
    table = exponent_table(cx)
    if h not in table.s:
        raise ExponentRangeError(f"degree {h} outside 1..{cx.n}")
    return table.q(h, p)
