import pytest

_RESULTS_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


@pytest.fixture
def acceptance(request):
    """``report(k, ok, detail)`` records and prints one criterion verdict."""
    results = request.config.stash[_RESULTS_KEY]

    def report(k: int, ok: bool, detail: str):
        line = f"ACCEPTANCE criterion {k:>2}: {'PASS' if ok else 'FAIL'} | {detail}"
        results[k] = line
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
