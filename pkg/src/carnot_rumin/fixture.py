"""Comparison of computed d_c matrices with reference matrices in an orthonormal basis.

Reference matrices may live in a different orthonormal basis of each E0^h, so
beyond the end degrees (compared up to diagonal signs) equivalence is tested
by solving for weight-preserving orthogonal changes of basis, with
basis-independent invariants as a fallback.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from itertools import product

import numpy as np
import sympy

from .enveloping import EnvelopingAlgebra
from .rumin import RadicalMatrix, RadicalOperator, RuminComplex
from .scalars import Surd, to_q

FIXTURE_PACKAGE = "carnot_rumin.fixtures"


def load_fixture(env: EnvelopingAlgebra, name: str = "cartan_dc.json", path=None) -> list[RadicalMatrix]:
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
    else:
        data = json.loads(resources.files(FIXTURE_PACKAGE).joinpath(name).read_text())
    out = []
    for m in sorted(data["matrices"], key=lambda m: m["degree"]):
        entries = [[_entry(env, e) for e in row] for row in m["entries"]]
        out.append(RadicalMatrix(env, entries, len(entries[0]) if entries else 0))
    return out


def _entry(env: EnvelopingAlgebra, spec: dict) -> RadicalOperator:
    op = env.parse(spec["operator"])
    scale = Surd.sqrt(spec.get("radicand", "1")) * to_q(spec.get("scalar", "1"))
    return RadicalOperator.scaled(op, scale)


@dataclass
class TierResult:
    tier: int
    degree: int | None
    passed: bool
    method: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"tier": self.tier, "degree": self.degree, "passed": self.passed,
                "method": self.method, "detail": self.detail}


@dataclass
class FixtureReport:
    results: list = field(default_factory=list)
    conjugators: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def tier(self, k: int) -> list:
        return [r for r in self.results if r.tier == k]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "results": [r.to_json() for r in self.results],
            "conjugators": {str(h): [[str(x) for x in row] for row in u.tolist()] for h, u in self.conjugators.items()},
        }


# -- tier 1 ------------------------------------------------------------------------

def diagonal_sign_matches(computed: RadicalMatrix, ref: RadicalMatrix) -> list[tuple]:
    """All (s_out, s_in) sign vectors with ref = diag(s_out) computed diag(s_in)."""
    if computed.shape != ref.shape:
        return []
    found = []
    for s_out in product((1, -1), repeat=computed.nrows):
        for s_in in product((1, -1), repeat=computed.ncols):
            ok = all(
                ref.entries[i][j] == _signed(computed.entries[i][j], s_out[i] * s_in[j])
                for i in range(computed.nrows) for j in range(computed.ncols)
            )
            if ok:
                found.append((s_out, s_in))
    return found


def _signed(a: RadicalOperator, s: int) -> RadicalOperator:
    return a if s == 1 else -a


# -- sympy bridge --------------------------------------------------------------------

def _coeff_map(a: RadicalOperator) -> dict:
    """{monomial: sympy coefficient in Q(sqrt r)}."""
    out: dict = {}
    for r, p in a.parts.items():
        root = sympy.sqrt(r)
        for m, c in p.terms.items():
            out[m] = out.get(m, 0) + sympy.Rational(int(c.numerator), int(c.denominator)) * root
    return out


def _symbolic_product(u, a_maps, nrows, ncols, left: bool):
    """Entries of U*A (left) or A*U as {monomial: expr}; U a sympy matrix, A a grid of coeff maps."""
    out = []
    for i in range(nrows):
        row = []
        for j in range(ncols):
            acc: dict = {}
            inner = u.shape[1] if left else u.shape[0]
            for k in range(inner):
                coef = u[i, k] if left else u[k, j]
                amap = a_maps[k][j] if left else a_maps[i][k]
                if coef == 0:
                    continue
                for m, c in amap.items():
                    acc[m] = acc.get(m, 0) + coef * c
            row.append(acc)
        out.append(row)
    return out


def _block_unknowns(h: int, weights: tuple):
    """Weight-preserving unknown matrix (zero across different weights)."""
    n = len(weights)
    syms = []
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if weights[i] == weights[j]:
                s = sympy.Symbol(f"u{h}_{i}_{j}")
                syms.append(s)
                row.append(s)
            else:
                row.append(sympy.Integer(0))
        rows.append(row)
    return sympy.Matrix(rows), syms


def _is_orthogonal(u: sympy.Matrix) -> bool:
    prod_ = (u * u.T).applyfunc(lambda x: sympy.nsimplify(sympy.expand(x)))
    return prod_ == sympy.eye(u.shape[0])


def solve_conjugators(cx: RuminComplex, computed, ref, fixed: dict) -> dict | None:
    """Orthogonal U_h (h not in ``fixed``) with U_(h+1) C_h = F_h U_h for every h, or None."""
    n = cx.n
    mats, unknowns = {}, []
    for h in range(n + 1):
        if h in fixed:
            mats[h] = sympy.Matrix(fixed[h])
        else:
            mats[h], syms = _block_unknowns(h, cx.basis.weights[h])
            unknowns += syms
    equations = []
    for h in range(n):
        c_maps = [[_coeff_map(a) for a in row] for row in computed[h].entries]
        f_maps = [[_coeff_map(a) for a in row] for row in ref[h].entries]
        left = _symbolic_product(mats[h + 1], c_maps, computed[h].nrows, computed[h].ncols, True)
        right = _symbolic_product(mats[h], f_maps, ref[h].nrows, ref[h].ncols, False)
        for i in range(computed[h].nrows):
            for j in range(computed[h].ncols):
                for m in set(left[i][j]) | set(right[i][j]):
                    e = sympy.expand(left[i][j].get(m, 0) - right[i][j].get(m, 0))
                    if e != 0:
                        equations.append(e)
    if not unknowns:
        return mats if not equations else None
    sols = sympy.linsolve(equations, unknowns)
    if not sols:
        return None
    sol = next(iter(sols))
    subs = dict(zip(unknowns, sol))
    free = set().union(*(sympy.sympify(v).free_symbols for v in sol)) & set(unknowns)
    out = {h: m.subs(subs) for h, m in mats.items()}
    if free:
        # impose orthogonality on the remaining family
        ortho = []
        for h, m in out.items():
            if h not in fixed:
                ortho += list((m * m.T - sympy.eye(m.shape[0])).applyfunc(sympy.expand))
        ortho = [e for e in ortho if e != 0]
        found = sympy.solve(ortho, sorted(free, key=str), dict=True)
        if not found:
            return None
        out = {h: m.subs(found[0]) for h, m in out.items()}
        if any(m.free_symbols for m in out.values()):
            out = {h: m.subs({s: 0 for s in m.free_symbols}) for h, m in out.items()}
    if not all(_is_orthogonal(m) for h, m in out.items()):
        return None
    return out


# -- invariants ------------------------------------------------------------------------

def symbol_matrix(m: RadicalMatrix, xi) -> np.ndarray:
    """Entrywise commutative evaluation X_i -> xi_i (linear in each entry)."""
    out = np.zeros(m.shape)
    for i, row in enumerate(m.entries):
        for j, a in enumerate(row):
            total = 0.0
            for r, p in a.parts.items():
                for mono, c in p.terms.items():
                    total += float(c) * r ** 0.5 * float(np.prod([x ** e for x, e in zip(xi, mono)]))
            out[i, j] = total
    return out


def invariants_match(computed: RadicalMatrix, ref: RadicalMatrix, samples: int = 8, seed: int = 0) -> tuple[bool, str]:
    if computed.shape != ref.shape:
        return False, f"shape {computed.shape} vs {ref.shape}"
    deg_c = {d for row in computed.degree_pattern() for d in row if d is not None}
    deg_f = {d for row in ref.degree_pattern() for d in row if d is not None}
    if deg_c != deg_f or -1 in deg_c:
        return False, f"entry degrees {sorted(deg_c)} vs {sorted(deg_f)}"
    rng = random.Random(seed)
    n = computed.env.n
    for _ in range(samples):
        xi = [rng.uniform(-2, 2) for _ in range(n)]
        sc = np.linalg.svd(symbol_matrix(computed, xi), compute_uv=False)
        sf = np.linalg.svd(symbol_matrix(ref, xi), compute_uv=False)
        if not np.allclose(sc, sf, rtol=1e-9, atol=1e-9):
            return False, f"symbol singular values differ at xi={xi}"
    return True, f"entry degrees {sorted(deg_c)}; symbol singular values agree at {samples} samples"


# -- driver ----------------------------------------------------------------------------

def compare_with_fixture(cx: RuminComplex, ref: list[RadicalMatrix] | None = None) -> FixtureReport:
    ref = ref if ref is not None else load_fixture(cx.env)
    n = cx.n
    computed = [cx.d_c_orthonormal(h) for h in range(n)]
    report = FixtureReport()
    if len(ref) != n:
        report.results.append(TierResult(0, None, False, "shape", f"{len(ref)} reference matrices, expected {n}"))
        return report

    ends = {}
    for h in sorted({0, n - 1}):
        matches = diagonal_sign_matches(computed[h], ref[h])
        ends[h] = matches
        detail = f"signs out/in {matches[0]}" if matches else "no diagonal sign change matches"
        report.results.append(TierResult(1, h, bool(matches), "exact up to diagonal signs", detail))

    for h in range(n - 1):
        ok = (ref[h + 1] @ ref[h]).is_zero()
        report.results.append(TierResult(2, h, ok, "reference d_c d_c = 0", "" if ok else "nonzero composition"))

    middle = [h for h in range(n) if h not in ends]
    solved = None
    if ends.get(0) and ends.get(n - 1):
        for (out0, in0), (out1, in1) in product(ends[0], ends[n - 1]):
            fixed = {0: sympy.diag(*in0), 1: sympy.diag(*out0)}
            if n - 1 in fixed and fixed[n - 1] != sympy.diag(*in1):
                continue
            fixed.update({n - 1: sympy.diag(*in1), n: sympy.diag(*out1)})
            solved = solve_conjugators(cx, computed, ref, fixed)
            if solved is not None:
                break
    if solved is not None:
        report.conjugators = {h: u for h, u in solved.items()}
        for h in middle:
            report.results.append(TierResult(3, h, True, "orthogonal change of basis",
                                             "conjugators found exactly"))
    else:
        for h in middle:
            ok, detail = invariants_match(computed[h], ref[h])
            report.results.append(TierResult(3, h, ok, "invariants", detail))
    return report
