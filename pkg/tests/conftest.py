import pytest

from finslerkit.jets import _kernels, use_backend

BACKENDS = ["numpy"] + (["numba"] if _kernels.NUMBA_KERNELS is not None else [])

# (criterion number, outcome, detail) collected by the acceptance module
CRITERIA = []


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _kernels.BACKEND
    use_backend(request.param)
    yield request.param
    use_backend(previous)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_report = rep


@pytest.fixture
def criterion(request):
    """Collects a detail string for an acceptance criterion and logs the outcome."""
    number = request.node.get_closest_marker("criterion").args[0]
    details = []
    yield details.append
    rep = getattr(request.node, "call_report", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    line = f"criterion {number}: {status}" + (f" ({'; '.join(details)})" if details else "")
    print(line)
    CRITERIA.append(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config.addinivalue_line("markers", "slow: long-running end-to-end check")


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
