import pytest

ACCEPTANCE_KEY = pytest.StashKey[dict]()
CRITERIA = range(1, 11)


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    store = request.config.stash[ACCEPTANCE_KEY]

    def record(criterion: int, ok: bool, detail: str):
        store[criterion] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for c in CRITERIA:
        if c in store:
            ok, detail = store[c]
            terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {c:2d}: NOT RUN")
