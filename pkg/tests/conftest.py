def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance lines even when output capture is on."""
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if "test_acceptance.py" in rep.nodeid and rep.when == "call":
                lines.extend(l for l in rep.capstdout.splitlines() if l.startswith("["))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[2])):
            terminalreporter.write_line(line)
