import numpy as np
import pytest

from proxmanip.config import Config

# criterion number -> (label, passed, detail), filled by tests marked with ``criterion``
_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session")
def cfg():
    return Config()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    num, label = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed:
        msg = str(rep.longrepr.reprcrash.message) if hasattr(rep.longrepr, "reprcrash") else "error"
        detail = (detail + "; " if detail else "") + msg.splitlines()[0]
    prev = _CRITERIA.get(num)
    passed = rep.passed and (prev is None or prev[1])
    _CRITERIA[num] = (label, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        label, passed, detail = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num} [{'PASS' if passed else 'FAIL'}] {label}: {detail}")
