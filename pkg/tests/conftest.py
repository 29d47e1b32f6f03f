import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns ``ok`` so tests can ``assert criterion(...)``."""
    results = request.config.stash[_RESULTS]

    def record(number, title, ok, detail, status=None):
        status = status or ("PASS" if ok else "FAIL")
        line = f"{status}  criterion {number:>2}: {title} [{detail}]"
        results.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(results):
            terminalreporter.write_line(line)
