import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from essrank.providers import StubProvider


@pytest.fixture
def stub():
    return StubProvider(seed=0)


@pytest.fixture
def raw_stub():
    """Unnormalized stub: embedding norm is sqrt(token count)."""
    return StubProvider(seed=0, normalize=False)


@pytest.fixture
def unit_stub():
    return StubProvider(seed=0, normalize=True)
