criterion_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    # Acceptance criteria verdicts are printed inside captured stdout; echo
    # them here so a plain `pytest -v` run shows one line per criterion.
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.write_line(line)
