import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from carnot_rumin import RuminComplex, build_group_model, preset  # noqa: E402


@pytest.fixture(scope="session")
def cartan():
    return preset("cartan")


@pytest.fixture(scope="session")
def cartan_group(cartan):
    return build_group_model(cartan)


@pytest.fixture(scope="session")
def cartan_cx(cartan):
    return RuminComplex(cartan)


@pytest.fixture(scope="session")
def heis_cx():
    return RuminComplex(preset("heisenberg-1"))


@pytest.fixture(scope="session")
def cartan_identities(cartan_cx):
    from carnot_rumin.identities import check_identities

    return check_identities(cartan_cx)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
    missing = [n for n in range(1, 11) if n not in results]
    if missing:
        terminalreporter.write_line(f"criteria not run: {missing}")
