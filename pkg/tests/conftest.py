import pytest

_results: dict = {}


def _key(item):
    m = item.get_closest_marker("criterion")
    return (m.args[0], m.args[1] if len(m.args) > 1 else "") if m else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    key = _key(item)
    if key is None or (rep.when != "call" and not rep.failed and not rep.skipped):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    if rep.when != "call" and status == "PASS":
        return
    _results[key] = (status, detail)


def pytest_deselected(items):
    for item in items:
        key = _key(item)
        if key is not None:
            why = "extended; select with -m extended" if item.get_closest_marker("extended") else "deselected"
            _results.setdefault(key, ("NOT RUN", why))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, part), (status, detail) in sorted(_results.items()):
        name = f"criterion {n}" + (f" [{part}]" if part else "")
        terminalreporter.write_line(f"{name}: {status}" + (f"  {detail}" if detail else ""))
