"""Exact operator identities of a Rumin complex, reported with residuals."""
from __future__ import annotations

from dataclasses import dataclass, field

from .enveloping import OperatorMatrix, compose
from .rumin import IDENTITY_DEGREE_CAP, RuminComplex


@dataclass
class IdentityResult:
    name: str
    degree: int
    passed: bool
    residual: OperatorMatrix | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"identity": self.name, "degree": self.degree, "passed": self.passed}
        if self.detail:
            out["detail"] = self.detail
        if self.residual is not None and not self.passed:
            out["residual"] = [
                {"row": i, "col": j, "operator": str(a)} for i, j, a in self.residual.nonzero()[:8]
            ]
        return out


@dataclass
class IdentityReport:
    results: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.passed]

    def add(self, name: str, degree: int, lhs: OperatorMatrix, rhs: OperatorMatrix | None = None):
        residual = lhs if rhs is None else lhs - rhs
        self.results.append(IdentityResult(name, degree, residual.is_zero(), residual))

    def to_json(self) -> dict:
        return {"passed": self.passed, "count": len(self.results), "failures": len(self.failures),
                "skipped": list(self.skipped), "identities": [r.to_json() for r in self.results]}


def _pow_label(label: str, k: int) -> str:
    if k == 0:
        return ""
    return label if k == 1 else f"({label})^{k}"


def _join(*parts: str) -> str:
    return " ".join(p for p in parts if p)


def intertwining_identities(cx: RuminComplex) -> list[tuple[str, int, OperatorMatrix, OperatorMatrix]]:
    """Delta commutes with d_c and delta_c up to powers of d_c delta_c / delta_c d_c.

    With Delta_h = (d delta)^a_h + (delta d)^b_h on E0^h, d Delta_h = (d delta)^b_h d and
    Delta_(h+1) d = (d delta)^a_(h+1) d, so the smaller power is padded on the other side.
    """
    out = []
    lap, ex = cx.laplacians, cx.laplacian_exponents
    for h in range(cx.n):
        d, delta = cx.d_c[h], cx.delta_c[h + 1]
        a, b = ex[h + 1][0], ex[h][1]
        dd_up = cx.d_delta(h + 1)
        dd_down = cx.delta_d(h)
        if a >= b:
            pad = a - b
            lhs = compose(cx.power(dd_up, pad), compose(d, lap[h]))
            rhs = compose(lap[h + 1], d)
            name = _join(_pow_label("d_c delta_c", pad), f"d_c Delta_{h} = Delta_{h + 1} d_c")
            out.append((name, h, lhs, rhs))
            lhs = compose(delta, lap[h + 1])
            rhs = compose(lap[h], compose(cx.power(dd_down, pad), delta))
            name = _join(f"delta_c Delta_{h + 1} = Delta_{h}", _pow_label("delta_c d_c", pad), "delta_c")
            out.append((name, h + 1, lhs, rhs))
        else:
            pad = b - a
            lhs = compose(d, lap[h])
            rhs = compose(lap[h + 1], compose(cx.power(dd_up, pad), d))
            name = _join(f"d_c Delta_{h} = Delta_{h + 1}", _pow_label("d_c delta_c", pad), "d_c")
            out.append((name, h, lhs, rhs))
            lhs = compose(cx.power(dd_down, pad), compose(delta, lap[h + 1]))
            rhs = compose(lap[h], delta)
            name = _join(_pow_label("delta_c d_c", pad), f"delta_c Delta_{h + 1} = Delta_{h} delta_c")
            out.append((name, h + 1, lhs, rhs))
    return out


def check_identities(cx: RuminComplex, cap: int = IDENTITY_DEGREE_CAP, commuting: bool = True) -> IdentityReport:
    report = IdentityReport()
    with cx.env.raised_cap(cap):
        for h in range(cx.n - 1):
            report.add("d_c d_c = 0", h, compose(cx.d_c[h + 1], cx.d_c[h]))
        for h in range(2, cx.n + 1):
            report.add("delta_c delta_c = 0", h, compose(cx.delta_c[h - 1], cx.delta_c[h]))
        for h in range(1, cx.n + 1):
            report.add(f"delta_c = ({cx.hodge_sign(h):+d}) * d_c * equals formal adjoint of d_c", h,
                       cx.delta_c[h], cx.delta_c_from_adjoint(h))
        try:
            cx.laplacians
        except ValueError as exc:
            report.skipped.append(f"Laplacian identities: {exc}")
            return report
        sub = cx.env.zero()
        for i in range(cx.lie.n_generators):
            sub = sub - cx.env.gen(i) ** 2
        report.add("Delta_0 = -(sum of squared horizontal fields)", 0,
                   cx.laplacians[0], OperatorMatrix(cx.env, [[sub]], ncols=1))
        for name, h, lhs, rhs in intertwining_identities(cx):
            report.add(name, h, lhs, rhs)
        if commuting:
            for h in range(cx.n + 1):
                lap = cx.laplacians[h]
                if h > 0:
                    dd = cx.d_delta(h)
                    report.add("d_c delta_c Delta = Delta d_c delta_c", h, compose(dd, lap), compose(lap, dd))
                if h < cx.n:
                    dd = cx.delta_d(h)
                    report.add("delta_c d_c Delta = Delta delta_c d_c", h, compose(dd, lap), compose(lap, dd))
    return report


def perturbed_d_c(cx: RuminComplex, h: int, i: int, j: int, extra) -> list[OperatorMatrix]:
    """Copy of the d_c chain with ``extra`` added to entry (i, j) of degree h."""
    out = []
    for k, m in enumerate(cx.d_c):
        if k == h:
            entries = [list(r) for r in m.entries]
            entries[i][j] = entries[i][j] + extra
            m = OperatorMatrix(m.env, entries, m.row_weights, m.col_weights, m.ncols)
        out.append(m)
    return out


def d_c_square_report(chain: list[OperatorMatrix]) -> IdentityReport:
    report = IdentityReport()
    for h in range(len(chain) - 1):
        report.add("d_c d_c = 0", h, compose(chain[h + 1], chain[h]))
    return report
