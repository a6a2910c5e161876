import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_results = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """``record(k, ok, detail)``: log the outcome of acceptance criterion ``k``."""
    results = request.config.stash.setdefault(_results, {})

    def record(k: int, ok: bool, detail: str) -> None:
        results[k] = (ok, detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_results, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
