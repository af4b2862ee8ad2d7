import time

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
SUITE_LIMIT_S = 300.0

_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _start
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    ok = elapsed < SUITE_LIMIT_S
    tr.write_line(f"full suite runtime: {elapsed:.1f} s (limit {SUITE_LIMIT_S:.0f} s) {'PASS' if ok else 'FAIL'}")
