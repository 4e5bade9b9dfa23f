import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chiralkramers.config import load_config
from chiralkramers.optics import BeamGeometry, FluidMedium, PolarizationSettings, TrapConfiguration
from chiralkramers.particle import MaterialOptics, chiral_sphere

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GOLD = MaterialOptics(-22.96 + 1.431j)
RAYLEIGH_RANGE = 1.725510941594719e-06

# filled by the acceptance tests, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def water():
    return FluidMedium.from_index(1.33, 0.88e-3, 295.0)


@pytest.fixture(scope="session")
def beam(water):
    return BeamGeometry.from_rayleigh_range(785e-9, RAYLEIGH_RANGE, water, 1e8)


@pytest.fixture(scope="session")
def left_particle(water):
    return chiral_sphere(20e-9, GOLD, water, 0.05, "left")


@pytest.fixture(scope="session")
def trap_factory(water, beam):
    def make(h_plus=0.0, h_minus=0.0, phase_delay=-np.pi, axis_angle=0.49945 * np.pi):
        return TrapConfiguration(water, beam, PolarizationSettings(h_plus, h_minus, phase_delay, axis_angle))

    return make


@pytest.fixture(scope="session")
def achiral_config():
    return load_config("paper-achiral.cfg")


@pytest.fixture(scope="session")
def reactive_config():
    return load_config("paper-reactive.cfg")


@pytest.fixture(scope="session")
def dissipative_config():
    return load_config("paper-dissipative-left.cfg")


@pytest.fixture(scope="session")
def achiral_model(achiral_config):
    return achiral_config.force_model()


@pytest.fixture(scope="session")
def reactive_model(reactive_config):
    return reactive_config.force_model()


@pytest.fixture(scope="session")
def dissipative_model(dissipative_config):
    return dissipative_config.force_model()
