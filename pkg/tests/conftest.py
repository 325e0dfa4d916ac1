import sys
from pathlib import Path

import numpy as np
import pytest

from prefgame import PreferenceScoreMatrix

sys.path.insert(0, str(Path(__file__).parent))


def make_skew(rng, n, scale=1.0):
    """Random skew-symmetric score matrix."""
    a = rng.normal(scale=scale, size=(n, n))
    return PreferenceScoreMatrix(np.triu(a, 1) - np.triu(a, 1).T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
