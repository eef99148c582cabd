import numpy as np
import pytest

_criteria: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion result; reported in the terminal summary."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _criteria[name] = (bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        ok, detail = _criteria[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
