import numpy as np
import pytest

from poselex import fixtures
from poselex.config import PipelineConfig
from poselex.pipeline import prepare_all
from poselex.synth import SyntheticSpec, generate

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_dataset():
    """Four subjects, three classes, three repetitions each."""
    classes = {k: fixtures.CLASSES[k] for k in ("jumping_jack", "change_weapon", "bow")}
    spec = SyntheticSpec(classes=classes, n_subjects=4, instances_per_class=3, seed=3)
    sequences, truth = generate(spec)
    config = PipelineConfig(k_multiplier=3)
    return sequences, truth, config, prepare_all(sequences, config)
