import numpy as np
import pytest

from iqdyne.acquisition import ExperimentConfig
from iqdyne.camera import CameraModel
from iqdyne.config import DEFAULT_FREQUENCY
from iqdyne.signal_model import AcField, NvEnsemble, Schedule, Xy8Block

#: Acceptance outcomes, filled by tests/test_acceptance.py and echoed after the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def block():
    return Xy8Block()


@pytest.fixture
def ensemble():
    return NvEnsemble()


@pytest.fixture
def default_config():
    return ExperimentConfig(AcField.single(4e-6, DEFAULT_FREQUENCY), schedule=Schedule(), camera=CameraModel())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
