import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from encoder.agent import AgentModel  # noqa: E402

QUALITY_MAP = [
    [6, 4, 3, 2, 2, 3, 3, 2],
    [4, 4, 4, 3, 3, 4, 6, 3],
    [3, 4, 4, 2, 0, 0, 4, 3],
    [2, 3, 3, 2, 1, 2, 3, 2],
    [2, 3, 0, 0, 0, 3, 3, 2],
    [3, 4, 0, 2, 3, 4, 4, 3],
    [4, 4, 4, 3, 3, 4, 6, 3],
    [6, 4, 3, 2, 2, 3, 3, 2],
]


@pytest.fixture
def quality_map():
    return np.array(QUALITY_MAP, dtype=int)


@pytest.fixture
def agent_model():
    return AgentModel.double_integrator()


@pytest.fixture
def rng():
    return np.random.default_rng(0)
