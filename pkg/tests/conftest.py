import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("wel", max_examples=40, deadline=None)
settings.load_profile("wel")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
