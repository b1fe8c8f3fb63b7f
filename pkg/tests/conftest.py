import pytest

from xorlog import BACKEND


def pytest_collection_modifyitems(config, items):
    if BACKEND == "numba":
        return
    skip = pytest.mark.skip(reason="compiled backend disabled")
    for item in items:
        if "numba_only" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
