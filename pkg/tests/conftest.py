import os

import hypothesis
import numpy as np
import pytest

from qecrobust.stabilizer import build_code, get_code

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def divincenzo():
    return get_code("divincenzo5")


@pytest.fixture(scope="session")
def laflamme():
    return get_code("laflamme5")


@pytest.fixture(scope="session")
def bitflip():
    return get_code("bitflip3")


@pytest.fixture(scope="session")
def phaseflip():
    # a second [[3,1]] code for brute-force checks on synthetic tables
    return build_code(["XXI", "IXX"], ["ZZZ"], ["XII"], name="phaseflip3")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus_ops(rng, dim_out, dim_in, m):
    """Random CPTP map via a Stiefel isometry."""
    u = random_unitary(rng, dim_out * m)[:, :dim_in]
    return u.reshape(m, dim_out, dim_in)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
