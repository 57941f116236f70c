import pytest

_KEY = pytest.StashKey[list]()
_PASSED = pytest.StashKey[set]()


def pytest_configure(config):
    config.stash[_KEY] = []
    config.stash[_PASSED] = set()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, passed, detail)``."""
    lines = request.config.stash[_KEY]
    passed_set = request.config.stash[_PASSED]

    def record(number, passed, detail):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number}: {detail}"
        lines.append(line)
        print(line)
        if passed:
            passed_set.add(number)
        return passed

    record.passed = passed_set
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_KEY]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
