import pytest

from coldcoll import mfgm, spectra_fit, surrogates


@pytest.fixture(scope="session")
def mu():
    return surrogates.cs_mu()


@pytest.fixture(scope="session")
def cs():
    return surrogates.cs_ground()


@pytest.fixture(scope="session")
def cs_hamiltonian(cs, mu):
    grid = surrogates.CS_GRID.build(cs, mu)
    return mfgm.build_hamiltonian(grid, cs)


@pytest.fixture(scope="session")
def excited():
    return surrogates.excited_0g()


@pytest.fixture(scope="session")
def fc_setup(excited, cs, mu):
    return spectra_fit.FCSetup.build(excited, cs, mu)


# ------------------------------------------------------ acceptance report

_REPORT = []


def pytest_configure(config):
    config._acceptance_lines = _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
