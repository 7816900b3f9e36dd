import time

ACCEPTANCE = {}
START = time.perf_counter()


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store one acceptance verdict for the end-of-run summary."""
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    terminalreporter.write_line(f"session wall time: {time.perf_counter() - START:.1f} s")
