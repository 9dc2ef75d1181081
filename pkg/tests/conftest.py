import importlib

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def _backends():
    mods = [importlib.import_module("ometric._kernels_py")]
    try:
        mods.append(importlib.import_module("ometric._kernels"))
    except ImportError:
        pass
    return mods


BACKENDS = _backends()


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def kern(request):
    return request.param


def naive_eval(tree, omega, values):
    """Recursive reference fold; independent of the postfix kernels."""
    if tree.is_leaf:
        return values[tree.index - 1]
    return omega(naive_eval(tree.left, omega, values), naive_eval(tree.right, omega, values))


# --- per-criterion acceptance summary ------------------------------------

_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ok = rep.outcome == "passed"
        entry = _CRITERIA.setdefault(mark.args[0], [0, 0, []])
        entry[0 if ok else 1] += 1
        if not ok:
            entry[2].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, failed, names = _CRITERIA[number]
        status = "PASS" if failed == 0 else "FAIL"
        line = f"criterion {number:>2}: {status}  ({passed} passed, {failed} failed)"
        if names:
            line += "  " + ", ".join(names)
        tr.write_line(line)
