import time

import numpy as np
import pytest

_CRITERIA = {}


class CriterionRecorder:
    """Collects measured quantities for one acceptance criterion and prints a verdict line."""

    def __init__(self, number, title, limit_s):
        self.number, self.title, self.limit_s = number, title, limit_s
        self.details = []
        self.ok = True
        self.t0 = time.perf_counter()

    def check(self, passed, detail):
        self.ok &= bool(passed)
        self.details.append(("" if passed else "FAILED ") + detail)
        return passed

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        self.check(elapsed < self.limit_s, f"runtime {elapsed:.1f}s < {self.limit_s:g}s")
        line = f"criterion {self.number:2d} {'PASS' if self.ok else 'FAIL'}: {self.title} | " + "; ".join(self.details)
        _CRITERIA[self.number] = line
        print(line)
        return self.ok


@pytest.fixture
def criterion():
    made = []

    def make(number, title, limit_s):
        rec = CriterionRecorder(number, title, limit_s)
        made.append(rec)
        return rec

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])
