"""Command-line interface: group, complex, check, leibniz, exponents, numcheck.

Exit codes: 0 pass, 1 identity failure, 2 input validation, 3 internal contract violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .lie import AlgebraValidationError, DEFAULT_BASIS_CAP, StratifiedLieAlgebra, preset
from .scalars import q_str, to_q

SCHEMA_VERSION = 1
CACHE_ENV = "CARNOT_RUMIN_CACHE"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CONTRACT = 0, 1, 2, 3


class InputError(Exception):
    pass


# -- plumbing ----------------------------------------------------------------------------

def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(payload: dict) -> str:
    return json.dumps({"schemaVersion": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True) + "\n"


def emit(args, text: str) -> None:
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)


def load_algebra(args) -> StratifiedLieAlgebra:
    if args.algebra:
        try:
            data = json.loads(Path(args.algebra).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise AlgebraValidationError("schema", f"cannot read {args.algebra}: {exc}") from exc
        return StratifiedLieAlgebra.from_json(data, args.cap)
    alg = preset(args.preset or "cartan")
    return alg.validate(args.cap)


def parse_rational(text: str):
    try:
        return to_q(text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"not an exact rational: {text!r}") from exc


def parse_polynomial(group, text: str):
    import sympy

    names = {f"x{i + 1}": sympy.Symbol(f"x{i + 1}") for i in range(group.dim)}
    try:
        expr = sympy.sympify(text.replace("^", "**"), locals=names)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise InputError(f"cannot parse polynomial {text!r}") from exc
    if expr.atoms(sympy.Float):
        raise InputError(f"floating-point coefficients are not allowed, use exact rationals: {text!r}")
    extra = expr.free_symbols - set(names.values())
    if extra:
        raise InputError(f"unknown variables {sorted(map(str, extra))}")
    try:
        return group.ring.from_expr(expr)
    except Exception as exc:  # noqa: BLE001 - sympy raises several types here
        raise InputError(f"not a polynomial: {text!r}") from exc


def cache_path(alg: StratifiedLieAlgebra) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / f"complex-{alg.digest()}.json"


# -- subcommands -------------------------------------------------------------------------

def cmd_group(args) -> int:
    from .group import build_group_model

    alg = load_algebra(args)
    g = build_group_model(alg, args.convention)
    if args.format == "json":
        emit(args, dumps(g.to_json()))
    else:
        lines = [f"algebra: {alg.name}", f"layers: {list(alg.layers)}", f"Q = {alg.homogeneous_dimension}",
                 f"convention: {g.convention}"]
        lines += [f"(x.y)_{k + 1} = {p.as_expr()}" for k, p in enumerate(g.law)]
        lines += [f"X{i + 1} = {g.field_string(i)}" for i in range(g.dim)]
        emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _complex_payload(cx, dumps_: list[str], orthonormal: bool) -> dict:
    out = {"algebra": cx.lie.to_json(), "metadata": cx.metadata(),
           "basis": {str(h): [str(v) for v in cx.basis.multivectors(h)] for h in range(cx.n + 1)},
           "presentation": "orthonormal" if orthonormal else "internal"}
    if "dc" in dumps_:
        out["dc"] = {str(h): (cx.d_c_orthonormal(h) if orthonormal else cx.d_c[h]).to_json() for h in range(cx.n)}
    if "deltac" in dumps_:
        out["deltac"] = {str(h): (cx.delta_c_orthonormal(h) if orthonormal else cx.delta_c[h]).to_json()
                         for h in range(1, cx.n + 1)}
    if "laplacians" in dumps_:
        out["laplacians"] = {str(h): (cx.laplacian_orthonormal(h) if orthonormal else cx.laplacians[h]).to_json()
                             for h in range(cx.n + 1)}
        out["laplacianOrders"] = list(cx.laplacian_orders)
        out["laplacianFormulas"] = {str(h): cx.laplacian_formula(h) for h in range(cx.n + 1)}
    if "pie" in dumps_:
        out["PiE"] = {str(h): cx.Pi_E[h].to_json() for h in range(cx.n + 1)}
    return out


def _complex_latex(cx, dumps_: list[str], orthonormal: bool) -> str:
    blocks = []
    if "dc" in dumps_:
        for h in range(cx.n):
            m = cx.d_c_orthonormal(h) if orthonormal else cx.d_c[h]
            blocks.append(f"% d_c: E_0^{h} -> E_0^{h + 1}\nd_c^{{({h})}} = {m.latex()}")
    if "deltac" in dumps_:
        for h in range(1, cx.n + 1):
            m = cx.delta_c_orthonormal(h) if orthonormal else cx.delta_c[h]
            blocks.append(f"% delta_c: E_0^{h} -> E_0^{h - 1}\n\\delta_c^{{({h})}} = {m.latex()}")
    if "laplacians" in dumps_:
        for h in range(cx.n + 1):
            m = cx.laplacian_orthonormal(h) if orthonormal else cx.laplacians[h]
            blocks.append(f"% Delta_{h} = {cx.laplacian_formula(h)}, order {cx.laplacian_orders[h]}\n"
                          f"\\Delta_{{{h}}} = {m.latex()}")
    if "basis" in dumps_:
        for h in range(cx.n + 1):
            blocks.append(f"% E_0^{h}: " + ", ".join(str(v) for v in cx.basis.multivectors(h)))
    return "\n\n".join(blocks) + "\n"


def _complex_text(cx, dumps_: list[str], orthonormal: bool) -> str:
    blocks = [f"dims {list(cx.dims)}  weights {[list(w) for w in cx.basis.weights]}"]
    if "dc" in dumps_:
        for h in range(cx.n):
            m = cx.d_c_orthonormal(h) if orthonormal else cx.d_c[h]
            blocks.append(f"d_c: E0^{h} -> E0^{h + 1}\n{m}")
    if "deltac" in dumps_:
        for h in range(1, cx.n + 1):
            m = cx.delta_c_orthonormal(h) if orthonormal else cx.delta_c[h]
            blocks.append(f"delta_c: E0^{h} -> E0^{h - 1}\n{m}")
    if "laplacians" in dumps_:
        for h in range(cx.n + 1):
            blocks.append(f"Delta_{h} = {cx.laplacian_formula(h)} (order {cx.laplacian_orders[h]})\n"
                          f"{cx.laplacian_orthonormal(h) if orthonormal else cx.laplacians[h]}")
    return "\n\n".join(blocks) + "\n"


def cmd_complex(args) -> int:
    from .rumin import RuminComplex

    alg = load_algebra(args)
    dumps_ = [d.strip() for d in args.dump.split(",") if d.strip()]
    unknown = set(dumps_) - {"dc", "deltac", "laplacians", "basis", "pie"}
    if unknown:
        raise InputError(f"unknown dump targets {sorted(unknown)}")
    orthonormal = not args.internal
    cached = cache_path(alg)
    key = f"{','.join(sorted(dumps_))}|{orthonormal}|{args.format}"
    if cached is not None and cached.exists():
        store = json.loads(cached.read_text())
        if key in store.get("artifacts", {}):
            emit(args, store["artifacts"][key])
            return EXIT_OK
    cx = RuminComplex(alg)
    if args.verify_contract:
        cx.verify_contract()
    if args.format == "json":
        text = dumps(_complex_payload(cx, dumps_, orthonormal))
    elif args.format == "latex":
        text = _complex_latex(cx, dumps_, orthonormal)
    else:
        text = _complex_text(cx, dumps_, orthonormal)
    if cached is not None:
        store = json.loads(cached.read_text()) if cached.exists() else {"algebraDigest": alg.digest(),
                                                                        "artifacts": {}}
        store["artifacts"][key] = text
        atomic_write(cached, json.dumps(store, indent=2, sort_keys=True))
    emit(args, text)
    return EXIT_OK


def cmd_check(args) -> int:
    from .group import build_group_model
    from .identities import check_identities
    from .rumin import ContractViolation, RuminComplex

    alg = load_algebra(args)
    selected = {name for name in ("contract", "identities", "fixture", "leibniz", "numeric")
                if getattr(args, name) or args.all}
    if not selected:
        selected = {"contract", "identities"}
    cx = RuminComplex(alg)
    report: dict = {"algebra": alg.name, "suites": {}}
    ok = True
    try:
        cx.verify_contract()
        report["suites"]["contract"] = {"passed": True}
    except ContractViolation as exc:
        report["suites"]["contract"] = {"passed": False, "identity": exc.identity, "degree": exc.degree,
                                        "residual": str(exc.residual)}
        emit(args, dumps(report))
        return EXIT_CONTRACT
    if "identities" in selected:
        rep = check_identities(cx)
        report["suites"]["identities"] = rep.to_json()
        ok &= rep.passed
    if "fixture" in selected:
        if args.fixture_file or alg.digest() == preset("cartan").digest():
            from .fixture import compare_with_fixture, load_fixture

            ref = load_fixture(cx.env, path=args.fixture_file) if args.fixture_file else None
            rep = compare_with_fixture(cx, ref)
            report["suites"]["fixture"] = rep.to_json()
            ok &= rep.passed
        else:
            report["suites"]["fixture"] = {"passed": True, "skipped": "no reference matrices for this algebra"}
    g = None
    if "leibniz" in selected:
        from .calculus import check_leibniz_structure

        g = build_group_model(alg)
        try:
            rep = check_leibniz_structure(cx, g, probes=args.probes, seed=args.seed)
            report["suites"]["leibniz"] = rep.to_json()
            ok &= rep.passed
        except ValueError as exc:
            report["suites"]["leibniz"] = {"passed": True, "skipped": str(exc)}
    if "numeric" in selected:
        from .numeric import QuadratureGrid, adjointness_check

        g = g or build_group_model(alg)
        results = []
        for h in range(1, cx.n + 1):
            r = adjointness_check(cx, g, h, trials=args.trials, grid=QuadratureGrid(args.grid, args.rule),
                                  seed=args.seed)
            results.append({**r.to_json(), "passed": r.max_rel_err < args.tol})
        passed = all(r["passed"] for r in results)
        report["suites"]["numeric"] = {"passed": passed, "adjointness": results}
        ok &= passed
    report["passed"] = bool(ok)
    emit(args, dumps(report))
    return EXIT_OK if ok else EXIT_FAIL


def _operator_for(cx, which: str, h: int):
    if which == "dc":
        if not 0 <= h < cx.n:
            raise InputError(f"d_c is defined on degrees 0..{cx.n - 1}")
        return cx.d_c[h]
    if which == "deltac":
        if not 1 <= h <= cx.n:
            raise InputError(f"delta_c is defined on degrees 1..{cx.n}")
        return cx.delta_c[h]
    if which == "dcdeltac":
        if not 1 <= h <= cx.n:
            raise InputError(f"d_c delta_c is defined on degrees 1..{cx.n}")
        return cx.d_delta(h)
    raise InputError(f"unknown operator {which!r}")


def cmd_leibniz(args) -> int:
    from .calculus import commutator_direct, leibniz_commutator
    from .group import build_group_model
    from .rumin import RuminComplex

    alg = load_algebra(args)
    cx = RuminComplex(alg)
    g = build_group_model(alg)
    zeta = parse_polynomial(g, args.zeta)
    op = _operator_for(cx, args.operator, args.degree)
    dec = leibniz_commutator(op, zeta, g, horizontal=not args.pbw)
    groups = {}
    for k in dec.nonzero_groups():
        grid = dec.groups[k]
        groups[str(k)] = {
            "derivativeOrder": k,
            "entries": [[str(e) for e in row] for row in grid],
        }
    # self-check on a fixed test function
    u = [g.ring.gens[0] ** 2 + g.ring.gens[-1] for _ in range(op.ncols)]
    exact = dec.apply(u) == commutator_direct(op, zeta, u, g)
    payload = {"operator": args.operator, "degree": args.degree, "zeta": str(zeta.as_expr()),
               "operatorOrder": op.max_degree(), "groups": groups, "exactOnProbe": exact}
    if args.format == "json":
        emit(args, dumps(payload))
    else:
        lines = [f"[{args.operator}, zeta] on degree {args.degree}, zeta = {zeta.as_expr()}"]
        for k, gr in groups.items():
            lines.append(f"  derivative order {k}:")
            lines += ["    " + " | ".join(row) for row in gr["entries"]]
        emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if exact else EXIT_FAIL


def cmd_exponents(args) -> int:
    from .calculus import exponent_table
    from .rumin import RuminComplex

    alg = load_algebra(args)
    table = exponent_table(RuminComplex(alg))
    p = parse_rational(args.p) if args.p is not None else None
    if p is not None and p < 1:
        raise InputError(f"p must be at least 1, got {q_str(p)}")
    payload = table.to_json(p)
    if args.format == "json":
        emit(args, dumps(payload))
    else:
        rows = [f"{'h':>3} {'s_h':>4} {'r_h':>4} {'q_h(p=1)':>9}" + (f" {'q_h(p)':>14}" if p is not None else "")]
        for h in table.s:
            r = table.r.get(h, "-")
            q1 = payload["qAtP1"].get(str(h), "-")
            line = f"{h:>3} {table.s[h]:>4} {r!s:>4} {q1:>9}"
            if p is not None:
                line += f" {payload['q'][str(h)]:>14}"
            rows.append(line)
        rows.append(f"Q = {table.Q}, M = {list(table.M)}")
        emit(args, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_numcheck(args) -> int:
    from .group import build_group_model
    from .numeric import QuadratureGrid, adjointness_check
    from .rumin import RuminComplex

    alg = load_algebra(args)
    cx = RuminComplex(alg)
    if not 1 <= args.degree <= cx.n:
        raise InputError(f"degree must be in 1..{cx.n}")
    g = build_group_model(alg)
    grid = QuadratureGrid(args.grid, args.rule, samples=args.samples, seed=args.seed)
    r = adjointness_check(cx, g, args.degree, trials=args.trials, grid=grid, seed=args.seed)
    payload = {**r.to_json(), "tolerance": args.tol, "passed": r.max_rel_err < args.tol}
    if args.rule == "montecarlo":
        payload["standardError"] = grid.last_stderr
    emit(args, dumps(payload))
    return EXIT_OK if payload["passed"] else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", "--group", dest="preset", help="abelian-n, heisenberg-n, engel, cartan, free-m-k")
    src.add_argument("--algebra", help="JSON file with layers and sparse brackets")
    common.add_argument("--cap", type=int, default=DEFAULT_BASIS_CAP, help="maximum basis size")
    common.add_argument("--format", choices=("json", "latex", "text"), default="json")
    common.add_argument("--output", "-o", help="write to this file (atomically) instead of stdout")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="carnot-rumin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group", parents=[common], help="group law, fields, dilations")
    p.add_argument("--convention", choices=("ordered", "bch"), default="ordered")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("complex", parents=[common], help="Rumin complex matrices")
    p.add_argument("--dump", default="dc", help="comma list of dc, deltac, laplacians, basis, pie")
    p.add_argument("--internal", action="store_true", help="use the unnormalised internal bases")
    p.add_argument("--verify-contract", action="store_true", help="check the projection contract first")
    p.set_defaults(func=cmd_complex)

    p = sub.add_parser("check", parents=[common], help="run identity suites")
    p.add_argument("--all", action="store_true")
    for name in ("contract", "identities", "fixture", "leibniz", "numeric"):
        p.add_argument(f"--{name}", action="store_true")
    p.add_argument("--fixture-file")
    p.add_argument("--probes", type=int, default=200)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--grid", type=int, default=24)
    p.add_argument("--rule", choices=("gauss", "midpoint", "exact"), default="gauss")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("leibniz", parents=[common], help="decompose [P, zeta]")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--zeta", required=True, help="polynomial in x1..xN")
    p.add_argument("--operator", choices=("dc", "deltac", "dcdeltac"), default="dc")
    p.add_argument("--pbw", action="store_true", help="skip horizontal rewriting")
    p.set_defaults(func=cmd_leibniz)

    p = sub.add_parser("exponents", parents=[common], help="Sobolev/Poincare exponent table")
    p.add_argument("--p", help="rational p >= 1")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("numcheck", parents=[common], help="quadrature adjointness check")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--grid", type=int, default=24)
    p.add_argument("--rule", choices=("gauss", "midpoint", "montecarlo", "exact"), default="gauss")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_numcheck)
    return parser


def main(argv=None) -> int:
    from .calculus import ExponentRangeError
    from .rumin import ContractViolation

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AlgebraValidationError as exc:
        print(f"error: invalid algebra, {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ExponentRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ContractViolation as exc:
        print(f"error: internal contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
