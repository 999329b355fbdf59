import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
