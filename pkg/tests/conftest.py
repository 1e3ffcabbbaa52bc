import pytest

# (name, status, detail) recorded by the acceptance tests
ACCEPTANCE_LINES: list[tuple[str, str, str]] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL/SKIP line for the acceptance summary, then assert."""

    def record(name: str, passed: bool | None, detail: str) -> None:
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        ACCEPTANCE_LINES.append((name, status, detail))
        if passed is None:
            pytest.skip(detail)
        assert passed, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{status}  {name}: {detail}")
