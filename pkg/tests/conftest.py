import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qfshift.atom import CS_DIPOLE_MAGNITUDE, CS_WAVELENGTH, dipole_vector, omega_from_wavelength
from qfshift.medium import DielectricModel, spectral_markers

settings.register_profile(
    "qfshift",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qfshift")

Z10 = 10e-9


@pytest.fixture(scope="session")
def sapphire():
    return DielectricModel.sapphire()


@pytest.fixture(scope="session")
def omega_l(sapphire):
    return spectral_markers(sapphire).omega_l


@pytest.fixture(scope="session")
def omega_cs():
    return omega_from_wavelength(CS_WAVELENGTH)


@pytest.fixture(scope="session")
def d_iso():
    return dipole_vector(CS_DIPOLE_MAGNITUDE, "isotropic")


@pytest.fixture(scope="session")
def d_z():
    return np.array([0.0, 0.0, CS_DIPOLE_MAGNITUDE])


def pytest_collection_modifyitems(items):
    for item in items:
        if getattr(getattr(item, "obj", None), "is_hypothesis_test", False):
            item.add_marker(pytest.mark.property)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
