import numpy as np
import pytest

from sector_heat import DomainSpec


@pytest.fixture
def half_line():
    return DomainSpec(1, 1, 0.5, 1.0)


@pytest.fixture
def half_plane():
    return DomainSpec(2, 1, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = []


@pytest.fixture
def record():
    """Log one acceptance line; the summary hook prints all of them."""
    def _record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
