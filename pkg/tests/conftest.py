import re


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" and outcome != "error":
                continue
            match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", rep.nodeid)
            if match:
                detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
                rows.append((int(match.group(1)), match.group(2), outcome, rep.duration, detail))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, outcome, duration, detail in sorted(rows):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {num:2d} {name:<32} {verdict}  {duration:6.2f}s"
        if detail:
            line += f"  {detail}"
        terminalreporter.write_line(line)
