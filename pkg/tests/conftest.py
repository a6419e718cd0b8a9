import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from thompson.cosetgraph import explore


@pytest.fixture(scope="session")
def v_ball_7():
    return explore("V", 7)


@pytest.fixture(scope="session")
def f_ball_8():
    return explore("F", 8)


@pytest.fixture(scope="session")
def t_ball_6():
    return explore("T", 6)
