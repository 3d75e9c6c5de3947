"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.fixture(scope="session")
def acceptance(request):
    """Recorder ``acceptance(criterion, ok, detail)`` shared by the acceptance tests."""
    store = request.config.stash[_KEY]

    def record(criterion, ok, detail):
        store.setdefault(criterion, []).append((bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(store):
        rows = store[criterion]
        failed = [d for ok, d in rows if not ok]
        verdict = "PASS" if not failed else "FAIL"
        summary = f"{len(rows) - len(failed)}/{len(rows)} checks"
        terminalreporter.write_line(f"criterion {criterion}: {verdict} ({summary})")
        for d in failed:
            terminalreporter.write_line(f"    failed: {d}")
