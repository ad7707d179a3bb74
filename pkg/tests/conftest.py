import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qotto", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("qotto")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for out in sorted(mod.RESULTS, key=lambda o: o.number):
        terminalreporter.write_line(out.line())
