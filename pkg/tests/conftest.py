import numpy as np
import pytest

from dmcquant import _backend

ALPHAS = (0.5, 1.0, 2.0, np.inf)

_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.fixture(params=_backend.available())
def backend(request):
    with _backend.use(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record(request):
    """Acceptance tests put a one-line summary of what they measured here."""
    notes: list[str] = []
    request.node._criterion_notes = notes
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    n, title = marker.args
    notes = "; ".join(getattr(item, "_criterion_notes", []))
    _criteria[n] = (title, "PASS" if rep.passed else "FAIL", notes)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status, notes = _criteria[n]
        line = f"criterion {n:2d} {status}: {title}"
        if notes:
            line += f" ({notes})"
        terminalreporter.write_line(line)
