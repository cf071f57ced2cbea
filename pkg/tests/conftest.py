import sys
import numpy as np
import pytest

from stacz import DeviceParams, TrajectorySpec, solve_theta_f, synthesize
from stacz.dynamics import gate_channel, propagate_unitary

CZ = np.diag([1, 1, 1, -1]).astype(complex)


@pytest.fixture(scope="session")
def device():
    return DeviceParams.reference()


@pytest.fixture(scope="session")
def closed_device(device):
    return device.closed()


@pytest.fixture(scope="session")
def theta_f(closed_device):
    return solve_theta_f(closed_device, 20.0)


@pytest.fixture(scope="session")
def cz_spec(device, theta_f):
    return TrajectorySpec.for_device(device, theta_f)


@pytest.fixture(scope="session")
def cz_waveform(device, cz_spec):
    return synthesize(device, cz_spec)


@pytest.fixture(scope="session")
def cz_result(cz_waveform, closed_device):
    return propagate_unitary(cz_waveform, closed_device)


@pytest.fixture(scope="session")
def lindblad_channel(cz_waveform, device):
    return gate_channel(cz_waveform, device, decoherence=True)


@pytest.fixture(scope="session")
def closed_channel(cz_waveform, device):
    return gate_channel(cz_waveform, device, decoherence=False)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
