import re

import numpy as np
import pytest

from luxfuse.frames import Frame, Modality


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


def make_frame(value, modality=Modality.RGB, width=8, height=8, timestamp_ms=0):
    """Constant-valued frame helper; value is a channel triple or a scalar."""
    pixels = np.zeros((height, width, 3), dtype=np.uint8)
    pixels[:] = value
    return Frame(pixels, modality, timestamp_ms)


_CRITERION = re.compile(r"test_c(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion."""
    outcomes: dict[int, str] = {}
    titles: dict[int, str] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.getreports(status):
            if "test_acceptance.py" not in report.nodeid:
                continue
            match = _CRITERION.match(report.nodeid.rsplit("::", 1)[-1])
            if not match:
                continue
            num = int(match.group(1))
            titles[num] = match.group(2).replace("_", " ")
            if status == "passed":
                outcomes.setdefault(num, "PASS")
            else:
                outcomes[num] = "FAIL"
    if outcomes:
        terminalreporter.section("acceptance criteria")
        for num in sorted(outcomes):
            terminalreporter.write_line(f"criterion {num:2d}: {outcomes[num]}  {titles[num]}")
