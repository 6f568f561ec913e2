import pytest


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, with the measured numbers."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::" not in getattr(rep, "nodeid", "") or rep.when != "call" and outcome != "error":
                continue
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            rows.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL",
                         props.get("title", rep.nodeid), props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, title, detail in sorted(rows):
        terminalreporter.write_line(f"[{status}] {num:>2}. {title}: {detail}")


@pytest.fixture
def criterion(record_property):
    """Tag a test with its criterion number and let it attach a detail string."""

    class _Tag:
        def __call__(self, number: int, title: str):
            record_property("criterion", number)
            record_property("title", title)
            return self

        def detail(self, text: str):
            record_property("detail", text)

    return _Tag()
