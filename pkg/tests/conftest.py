import pytest

_ACCEPTANCE = {}


def record(criterion: str, ok: bool, detail: str = "") -> None:
    """Collect one sub-check of an acceptance criterion for the end-of-run summary."""
    _ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s[2:])):
        parts = _ACCEPTANCE[name]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
