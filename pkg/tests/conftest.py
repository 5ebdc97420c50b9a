import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from drift_spectra.mesh import IntervalDomain


@pytest.fixture
def unit_interval():
    return IntervalDomain(0.0, 1.0)
