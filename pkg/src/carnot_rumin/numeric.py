"""Numeric cross-oracle: operators applied through coordinate fields, and quadrature.

Test functions are polynomial x separable bump, with bump profile
b(t) = (1 - ((t - c)/r)^2)^e on |t - c| < r.  A function is kept in the
separable form sum_n p_n(x) prod_i b_i^(n_i)(x_i), which is closed under the
coordinate vector fields, so derivatives are exact and only the final
evaluation or integration is floating point.  Inside the intersection of two
supports every integrand is a polynomial, so tensor Gauss-Legendre rules with
enough nodes integrate exactly; the integrals factor over axes monomial by
monomial.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import Poly, Rational, Symbol

from .enveloping import EnvelopingOperator, OperatorMatrix
from .group import GroupModel, eval_poly
from .rumin import RuminComplex
from .scalars import Q, to_q

_T = Symbol("t")


class Bump1D:
    """(1 - ((t - c)/r)^2)^e on (c - r, c + r), zero outside."""

    def __init__(self, center, radius, exponent: int = 4):
        self.center = to_q(center)
        self.radius = to_q(radius)
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")
        self.exponent = exponent
        c = Rational(int(self.center.numerator), int(self.center.denominator))
        r = Rational(int(self.radius.numerator), int(self.radius.denominator))
        self._polys = [Poly((1 - ((_T - c) / r) ** 2) ** exponent, _T, domain="QQ")]
        self._float = {}

    @property
    def lo(self):
        return self.center - self.radius

    @property
    def hi(self):
        return self.center + self.radius

    def derivative(self, k: int) -> Poly:
        while len(self._polys) <= k:
            self._polys.append(self._polys[-1].diff(_T))
        return self._polys[k]

    def float_coeffs(self, k: int) -> np.ndarray:
        if k not in self._float:
            self._float[k] = np.array([float(c) for c in self.derivative(k).all_coeffs()])
        return self._float[k]

    def eval(self, k: int, t: np.ndarray) -> np.ndarray:
        vals = np.polyval(self.float_coeffs(k), t)
        inside = (t > float(self.lo)) & (t < float(self.hi))
        return np.where(inside, vals, 0.0)

    def eval_exact(self, k: int, t) -> Q:
        t = to_q(t)
        if not self.lo < t < self.hi:
            return Q(0)
        v = self.derivative(k).eval(Rational(int(t.numerator), int(t.denominator)))
        return to_q(v)


class SeparableFunction:
    """sum_n p_n(x) * prod_i b_i^(n_i)(x_i); ``bumps[i]`` None means no cutoff on axis i."""

    def __init__(self, group: GroupModel, terms: dict, bumps: tuple):
        self.group = group
        self.terms = {n: p for n, p in terms.items() if p}
        self.bumps = tuple(bumps)

    @classmethod
    def from_polynomial(cls, group, poly, bumps=None):
        bumps = tuple(bumps) if bumps is not None else (None,) * group.dim
        return cls(group, {(0,) * group.dim: poly}, bumps)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "SeparableFunction") -> "SeparableFunction":
        if other.bumps != self.bumps:
            raise ValueError("cannot add functions with different cutoffs")
        out = dict(self.terms)
        for n, p in other.terms.items():
            out[n] = out[n] + p if n in out else p
        return SeparableFunction(self.group, out, self.bumps)

    def scale(self, c) -> "SeparableFunction":
        c = to_q(c)
        from sympy.polys.domains import QQ

        cq = QQ(int(c.numerator), int(c.denominator))
        return SeparableFunction(self.group, {n: p * cq for n, p in self.terms.items()}, self.bumps)

    def partial(self, j: int) -> "SeparableFunction":
        gen = self.group.ring.gens[j]
        out: dict = {}
        for n, p in self.terms.items():
            dp = p.diff(gen)
            if dp:
                out[n] = out[n] + dp if n in out else dp
            if self.bumps[j] is not None:
                m = list(n)
                m[j] += 1
                m = tuple(m)
                out[m] = out[m] + p if m in out else p
        return SeparableFunction(self.group, out, self.bumps)

    def apply_field(self, i: int) -> "SeparableFunction":
        out: dict = {}
        for j, a in enumerate(self.group.fields[i]):
            if not a:
                continue
            for n, p in self.partial(j).terms.items():
                out[n] = out[n] + a * p if n in out else a * p
        return SeparableFunction(self.group, out, self.bumps)

    def apply_operator(self, op: EnvelopingOperator, cache: dict | None = None) -> "SeparableFunction":
        """Apply sum c_J X^J, rightmost letter first; suffix results are shared through ``cache``."""
        cache = cache if cache is not None else {}

        def word_value(word):
            if not word:
                return self
            if word not in cache:
                cache[word] = word_value(word[1:]).apply_field(word[0])
            return cache[word]

        out = SeparableFunction(self.group, {}, self.bumps)
        for word, c in op.words():
            out = out + word_value(word).scale(c)
        return out

    # -- evaluation ---------------------------------------------------------------
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(points.shape[0])
        for n, p in self.terms.items():
            val = _poly_eval_float(p, points)
            for i, k in enumerate(n):
                if self.bumps[i] is not None:
                    val = val * self.bumps[i].eval(k, points[:, i])
            total += val
        return total

    def evaluate_exact(self, point) -> Q:
        point = [to_q(v) for v in point]
        total = Q(0)
        for n, p in self.terms.items():
            val = Q(eval_poly(p, point))
            for i, k in enumerate(n):
                if self.bumps[i] is not None and val:
                    val *= self.bumps[i].eval_exact(k, point[i])
            total += val
        return total

    def support_box(self):
        return [(b.lo, b.hi) if b is not None else (None, None) for b in self.bumps]


def _poly_eval_float(p, points: np.ndarray) -> np.ndarray:
    terms = p.terms()
    if not terms:
        return np.zeros(points.shape[0])
    exps = np.array([m for m, _ in terms], dtype=float)
    coeffs = np.array([float(Fraction(int(c.numerator), int(c.denominator))) for _, c in terms])
    return (np.prod(points[:, None, :] ** exps[None, :, :], axis=2)) @ coeffs


@dataclass
class SampleForm:
    """Form of degree h whose component i multiplies the i-th internal basis vector of E0^h."""

    degree: int
    components: list  # SeparableFunction per E0^h basis element

    @property
    def bumps(self):
        return self.components[0].bumps if self.components else ()


def random_sample_form(cx: RuminComplex, group: GroupModel, h: int, rng: random.Random,
                       exponent: int = 4, poly_degree: int = 2, spread: float = 0.5) -> SampleForm:
    from .calculus import random_polynomial

    bumps = []
    for _ in range(group.dim):
        c = Fraction(rng.randint(-int(spread * 8), int(spread * 8)), 8)
        r = Fraction(rng.randint(6, 10), 8)
        bumps.append(Bump1D(Q(c), Q(r), exponent))
    comps = []
    for _ in range(cx.dims[h]):
        p = random_polynomial(group, rng, poly_degree, 3)
        if not p:
            p = group.ring.one
        comps.append(SeparableFunction.from_polynomial(group, p, bumps))
    return SampleForm(h, comps)


def apply_operator_form(p: OperatorMatrix, alpha: SampleForm, target_degree: int) -> SampleForm:
    if p.ncols != len(alpha.components):
        raise ValueError(f"operator expects {p.ncols} components, form has {len(alpha.components)}")
    caches = [dict() for _ in alpha.components]
    out = []
    for row in p.entries:
        acc = SeparableFunction(alpha.components[0].group, {}, alpha.bumps)
        for j, op in enumerate(row):
            if op:
                acc = acc + alpha.components[j].apply_operator(op, caches[j])
        out.append(acc)
    return SampleForm(target_degree, out)


def apply_operator_numeric(p: OperatorMatrix, alpha: SampleForm, points) -> np.ndarray:
    """Values of the components of P alpha at ``points`` (shape (npoints, N)).

    Entry contributions are evaluated separately and summed in floating point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros((p.nrows, points.shape[0]))
    caches = [dict() for _ in alpha.components]
    for i, row in enumerate(p.entries):
        for j, op in enumerate(row):
            if op:
                out[i] += alpha.components[j].apply_operator(op, caches[j]).evaluate(points)
    return out


# -- quadrature -------------------------------------------------------------------------

@dataclass
class QuadratureGrid:
    """Tensor rule on the intersection of supports: ``gauss``, ``midpoint``, ``exact`` or ``montecarlo``."""

    points: int = 24
    rule: str = "gauss"
    samples: int = 1_000_000
    seed: int = 0
    last_stderr: float = field(default=0.0, compare=False)

    def nodes(self, lo: float, hi: float):
        if self.rule == "gauss":
            x, w = np.polynomial.legendre.leggauss(self.points)
        elif self.rule == "midpoint":
            x = -1 + (2 * np.arange(self.points) + 1) / self.points
            w = np.full(self.points, 2.0 / self.points)
        else:
            raise ValueError(f"no 1D nodes for rule {self.rule!r}")
        half = (hi - lo) / 2
        return lo + half * (x + 1), half * w


def _intersection(a_bumps, b_bumps):
    box = []
    for ba, bb in zip(a_bumps, b_bumps):
        los = [b.lo for b in (ba, bb) if b is not None]
        his = [b.hi for b in (ba, bb) if b is not None]
        if not los:
            raise ValueError("pairing needs a compact support on every axis")
        box.append((max(los), min(his)))
    return box


def _pair_components(f: SeparableFunction, g: SeparableFunction, box, grid: QuadratureGrid, cache: dict):
    """Integral of f*g over ``box`` (both vanish outside it)."""
    if grid.rule == "montecarlo":
        return _pair_montecarlo(f, g, box, grid)
    total = Q(0) if grid.rule == "exact" else 0.0
    for n, p in f.terms.items():
        for m, q in g.terms.items():
            prod = p * q
            for mono, c in prod.terms():
                term = Q(int(c.numerator), int(c.denominator)) if grid.rule == "exact" else float(
                    Fraction(int(c.numerator), int(c.denominator)))
                for axis, a in enumerate(mono):
                    key = (axis, a, n[axis], m[axis], id(f.bumps[axis]), id(g.bumps[axis]))
                    if key not in cache:
                        cache[key] = _axis_integral(a, f.bumps[axis], n[axis], g.bumps[axis], m[axis],
                                                    box[axis], grid)
                    term = term * cache[key]
                    if term == 0:
                        break
                total += term
    return total


def _axis_integral(a, bf, kf, bg, kg, interval, grid):
    lo, hi = interval
    if grid.rule == "exact":
        poly = Poly(_T ** a, _T, domain="QQ")
        if bf is not None:
            poly = poly * bf.derivative(kf)
        if bg is not None:
            poly = poly * bg.derivative(kg)
        anti = poly.integrate()
        lo_r = Rational(int(lo.numerator), int(lo.denominator))
        hi_r = Rational(int(hi.numerator), int(hi.denominator))
        return to_q(anti.eval(hi_r) - anti.eval(lo_r))
    x, w = grid.nodes(float(lo), float(hi))
    vals = x ** a
    if bf is not None:
        vals = vals * bf.eval(kf, x)
    if bg is not None:
        vals = vals * bg.eval(kg, x)
    return float(np.dot(w, vals))


def _pair_montecarlo(f, g, box, grid):
    rng = np.random.default_rng(grid.seed)
    lo = np.array([float(b[0]) for b in box])
    hi = np.array([float(b[1]) for b in box])
    pts = lo + (hi - lo) * rng.random((grid.samples, len(box)))
    vals = f.evaluate(pts) * g.evaluate(pts)
    vol = float(np.prod(hi - lo))
    grid.last_stderr = math.sqrt(grid.last_stderr ** 2 + (vol * vals.std(ddof=1) / math.sqrt(grid.samples)) ** 2)
    return vol * float(vals.mean())


def pairing(alpha: SampleForm, beta: SampleForm, grid: QuadratureGrid, gram=None):
    """L2 pairing sum_i g_i int alpha_i beta_i dx (g = Gram weights of the internal basis)."""
    if alpha.degree != beta.degree:
        raise ValueError(f"degree mismatch: {alpha.degree} vs {beta.degree}")
    if not alpha.components:
        return 0.0
    box = _intersection(alpha.bumps, beta.bumps)
    if any(lo >= hi for lo, hi in box):
        return Q(0) if grid.rule == "exact" else 0.0
    grid.last_stderr = 0.0
    gram = gram if gram is not None else [1] * len(alpha.components)
    cache: dict = {}
    total = Q(0) if grid.rule == "exact" else 0.0
    for f, g, w in zip(alpha.components, beta.components, gram):
        val = _pair_components(f, g, box, grid, cache)
        total += (to_q(w) if grid.rule == "exact" else float(w)) * val
    return total


@dataclass
class AdjointnessResult:
    degree: int
    trials: int
    max_rel_err: float
    rule: str
    points: int

    def to_json(self) -> dict:
        return {"identity": "<d_c alpha, beta> = <alpha, delta_c beta>", "degree": self.degree,
                "trials": self.trials, "maxRelErr": self.max_rel_err, "rule": self.rule, "points": self.points}


def adjointness_check(cx: RuminComplex, group: GroupModel, h: int, trials: int = 20,
                      grid: QuadratureGrid | None = None, seed: int = 0, sign_flip: bool = False,
                      exponent: int = 4) -> AdjointnessResult:
    """max over trials of |<d_c a, b> - <a, delta_c b>| / (1 + |<d_c a, b>|), a of degree h-1, b of degree h.

    ``sign_flip`` negates delta_c (a deliberately wrong sign law) as a negative control.
    """
    grid = grid or QuadratureGrid()
    rng = random.Random(seed)
    worst = 0.0
    delta = cx.delta_c[h].scale(-1) if sign_flip else cx.delta_c[h]
    for _ in range(trials):
        a = random_sample_form(cx, group, h - 1, rng, exponent)
        b = random_sample_form(cx, group, h, rng, exponent)
        lhs = pairing(apply_operator_form(cx.d_c[h - 1], a, h), b, grid, cx.basis.gram[h])
        rhs = pairing(a, apply_operator_form(delta, b, h - 1), grid, cx.basis.gram[h - 1])
        err = abs(float(lhs) - float(rhs)) / (1 + abs(float(lhs)))
        worst = max(worst, err)
    return AdjointnessResult(h, trials, worst, grid.rule, grid.points)


def d_c_square_residual(cx: RuminComplex, group: GroupModel, h: int, npoints: int = 1000, seed: int = 0,
                        exponent: int = 8) -> float:
    """max |d_c d_c alpha| at random points inside the support of a random alpha of degree h."""
    rng = random.Random(seed)
    alpha = random_sample_form(cx, group, h, rng, exponent)
    first = apply_operator_form(cx.d_c[h], alpha, h + 1)
    box = alpha.components[0].support_box()
    nrng = np.random.default_rng(seed)
    lo = np.array([float(b[0]) for b in box])
    hi = np.array([float(b[1]) for b in box])
    pts = lo + (hi - lo) * nrng.random((npoints, len(box)))
    vals = apply_operator_numeric(cx.d_c[h + 1], first, pts)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def composition_agreement(p: EnvelopingOperator, q: EnvelopingOperator, f: SeparableFunction, points,
                          exact: bool = True):
    """(P Q) f versus P (Q f) at the given points; returns (lhs values, rhs values)."""
    pq = p * q
    lhs_f = f.apply_operator(pq)
    rhs_f = f.apply_operator(q).apply_operator(p)
    if exact:
        return [lhs_f.evaluate_exact(x) for x in points], [rhs_f.evaluate_exact(x) for x in points]
    pts = np.asarray([[float(v) for v in x] for x in points])
    return lhs_f.evaluate(pts), rhs_f.evaluate(pts)
