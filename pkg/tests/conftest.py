import pytest

from vqfactor.experiments import PRESETS
from vqfactor.ising import compile_hamiltonian


@pytest.fixture(scope="session")
def instance_3127():
    system, report = PRESETS["3127"].reduce()
    return system, compile_hamiltonian(system), report


@pytest.fixture(scope="session")
def instance_6557():
    system, report = PRESETS["6557"].reduce()
    return system, compile_hamiltonian(system), report


@pytest.fixture(scope="session")
def instance_big():
    system, report = PRESETS["1099551473989"].reduce()
    return system, compile_hamiltonian(system), report
