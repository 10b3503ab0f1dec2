import os
import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")

    def order(line):
        num, part = re.search(r"criterion (\d+)(\w*)", line).groups()
        return int(num), part

    for line in sorted(ACCEPTANCE_LINES, key=order):
        terminalreporter.write_line(line)


@pytest.fixture
def tmp_out(tmp_path):
    return str(tmp_path)
