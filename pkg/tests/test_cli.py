import json
import subprocess
import sys

import pytest

from carnot_rumin import cli
from carnot_rumin.rumin import ContractViolation, RuminComplex

JACOBI_BAD = {"layers": [1, 1, 1, 2, 2, 2, 3],
              "brackets": [[1, 2, 4, "1"], [2, 3, 5, "1"], [1, 3, 6, "1"], [1, 5, 7, "1"]]}


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_group_cartan(capsys):
    code, out, _ = run(capsys, "group", "--preset", "cartan")
    data = json.loads(out)
    assert code == 0
    assert data["Q"] == 10 and data["schemaVersion"] == 1


def test_group_abelian_law(capsys):
    code, out, _ = run(capsys, "group", "--preset", "abelian-3", "--format", "text")
    assert code == 0
    assert "(x.y)_1 = x1 + y1" in out and "(x.y)_3 = x3 + y3" in out


def test_bad_algebra_names_invariant(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(JACOBI_BAD))
    code, out, err = run(capsys, "group", "--algebra", str(bad))
    assert code == 2
    assert "jacobi" in err and out == ""


def test_unknown_preset_and_bad_file(capsys, tmp_path):
    assert run(capsys, "group", "--preset", "nope")[0] == 2
    broken = tmp_path / "x.json"
    broken.write_text("{not json")
    assert run(capsys, "complex", "--algebra", str(broken))[0] == 2


def test_complex_latex_degree_zero_block(capsys):
    code, out, _ = run(capsys, "complex", "--preset", "cartan", "--dump", "dc", "--format", "latex")
    assert code == 0
    assert out.count("\\begin{pmatrix}") == 5
    assert "d_c^{(0)} = \\begin{pmatrix} X_{1} \\\\ X_{2} \\end{pmatrix}" in out


def test_complex_json_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "complex", "--preset", "heisenberg-1", "--dump", "dc,deltac,laplacians,basis", "-o", str(a))
    run(capsys, "complex", "--preset", "heisenberg-1", "--dump", "dc,deltac,laplacians,basis", "-o", str(b))
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert set(data) >= {"dc", "deltac", "laplacians", "basis", "schemaVersion"}
    assert data["laplacianOrders"] == [2, 4, 4, 2]
    assert not list(tmp_path.glob(".*.tmp"))


def test_complex_cache(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path / "cache"))
    code, first, _ = run(capsys, "complex", "--preset", "heisenberg-1")
    files = list((tmp_path / "cache").glob("complex-*.json"))
    assert code == 0 and len(files) == 1
    monkeypatch.setattr(RuminComplex, "__init__", lambda *a, **k: pytest.fail("cache not used"))
    code, second, _ = run(capsys, "complex", "--preset", "heisenberg-1")
    assert second == first


def test_unknown_dump_target(capsys):
    assert run(capsys, "complex", "--dump", "dc,foo")[0] == 2


def test_check_all_heisenberg(capsys):
    code, out, _ = run(capsys, "check", "--preset", "heisenberg-1", "--all", "--probes", "20", "--trials", "2")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert set(rep["suites"]) == {"contract", "identities", "fixture", "leibniz", "numeric"}


def test_check_contract_violation_exit_code(capsys, monkeypatch):
    def boom(self):
        raise ContractViolation("Pi_E Pi_E = Pi_E", 2, None)

    monkeypatch.setattr(RuminComplex, "verify_contract", boom)
    code, out, _ = run(capsys, "check", "--preset", "heisenberg-1")
    assert code == 3
    assert json.loads(out)["suites"]["contract"]["passed"] is False


def test_check_identity_failure_exit_code(capsys, monkeypatch):
    from carnot_rumin import identities

    real = identities.check_identities

    def broken(cx, *a, **k):
        rep = real(cx, *a, **k)
        rep.add("planted failure", 0, cx.d_c[0])
        return rep

    monkeypatch.setattr(identities, "check_identities", broken)
    code, out, _ = run(capsys, "check", "--preset", "heisenberg-1", "--identities")
    assert code == 1
    assert not json.loads(out)["passed"]


def test_leibniz_command(capsys):
    code, out, _ = run(capsys, "leibniz", "--preset", "cartan", "--degree", "1", "--zeta", "x1^2*x2 + 3/2*x3")
    data = json.loads(out)
    assert code == 0 and data["exactOnProbe"]
    assert sorted(data["groups"]) == ["1", "2", "3"]


def test_leibniz_rejects_floats_and_bad_degree(capsys):
    assert run(capsys, "leibniz", "--degree", "1", "--zeta", "x1 + 0.5")[0] == 2
    assert run(capsys, "leibniz", "--degree", "7", "--zeta", "x1")[0] == 2
    assert run(capsys, "leibniz", "--degree", "1", "--zeta", "y1")[0] == 2


def test_exponents_command(capsys):
    code, out, _ = run(capsys, "exponents", "--preset", "cartan")
    data = json.loads(out)
    assert code == 0
    assert data["qAtP1"] == {"1": "10/9", "2": "10/7", "3": "5/4", "4": "10/7"}
    code, out, _ = run(capsys, "exponents", "--format", "text", "--p", "2")
    assert code == 0 and "10/9" in out and "10/3" in out
    assert run(capsys, "exponents", "--p", "1/2")[0] == 2


def test_numcheck_command(capsys):
    code, out, _ = run(capsys, "numcheck", "--preset", "cartan", "--degree", "1", "--trials", "2")
    data = json.loads(out)
    assert code == 0
    assert set(data) >= {"identity", "trials", "maxRelErr"}
    assert data["maxRelErr"] < 1e-6


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "carnot_rumin", "exponents", "--format", "text"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "Q = 10" in res.stdout
