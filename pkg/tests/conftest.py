import pytest

from y00sim.keystream import LfsrSpec, MappingTable
from y00sim.modem import Y00Config


def make_cfg(M=16, alpha0=3.0, eta=1.0, sigma=1.0, w_s=7, w_dx=5, mapping_seed=None):
    mapping = MappingTable.identity(M) if mapping_seed is None else MappingTable.seeded(M, mapping_seed)
    return Y00Config(
        M=M, alpha0=alpha0, eta=eta, het_sigma=sigma,
        spec_s=LfsrSpec.primitive(w_s), spec_dx=LfsrSpec.primitive(w_dx), mapping=mapping,
    )


@pytest.fixture
def cfg16():
    return make_cfg()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
