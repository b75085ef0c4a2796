"""Print one line per acceptance check at the end of a run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                rows[nodeid] = status
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance checks")
    for nodeid in sorted(rows):
        state = "PASS" if rows[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{state}: {nodeid.split('::')[-1]}")
