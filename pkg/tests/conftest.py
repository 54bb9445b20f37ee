import pytest

_LINES: list[str] = []


class Criterion:
    """Collects named sub-checks and emits one PASS/FAIL line for a criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks: list[tuple[str, bool]] = []

    def check(self, label: str, ok: bool) -> bool:
        self.checks.append((label, bool(ok)))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok in self.checks)

    def emit(self, seconds: float) -> None:
        bad = [label for label, ok in self.checks if not ok]
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] criterion {self.number:>2}: {self.title} ({seconds:.1f} s)"
        for label, ok in self.checks:
            line += f"\n        {'ok ' if ok else 'BAD'} {label}"
        _LINES.append(line)
        print(line)
        assert not bad, f"criterion {self.number} failed: " + "; ".join(bad)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
