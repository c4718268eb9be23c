import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fspq.scheme import CostCounters  # noqa: E402
from fspq.wots import WotsParams, make_base_scheme  # noqa: E402

TOY = WotsParams(w=4, n=256, m=4)


@pytest.fixture
def counters():
    return CostCounters()


@pytest.fixture
def wots(counters):
    return make_base_scheme("wots-sha256", counters)


@pytest.fixture
def toy(counters):
    return make_base_scheme("wots-sha256", counters, params=TOY)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
