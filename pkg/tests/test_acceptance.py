"""Acceptance criteria 1-10, one verification suite each.

Every test prints a single ``[PASS]``/``[FAIL]`` line (visible with ``-s`` or
in the ``-v`` log) and then asserts on the suite verdict.
"""

import pytest

from relboltz import verify as V

CRITERIA = [
    (1, "conservation and invariance", "conservation", 60.0),
    (2, "GS Jacobian", "jacobian", None),
    (3, "Lorentz constructions", "lorentz", None),
    (4, "invariant identity", "invariant", None),
    (5, "Juttner normalization and bounds", "juttner", None),
    (6, "asymptotic slopes", "slopes", 120.0),
    (7, "cut-off geometry", "cutoff", None),
    (8, "solver uniformity in c", "solver", 600.0),
    (9, "Newtonian limit end to end", "limit", 1800.0),
    (10, "moment conservation", "moments", None),
]


def _params():
    for num, title, suite, budget in CRITERIA:
        marks = [pytest.mark.slow] if suite in V.HEAVY else []
        yield pytest.param(num, title, suite, budget, marks=marks, id=f"criterion_{num:02d}_{suite}")


@pytest.mark.parametrize("num,title,suite,budget", list(_params()))
def test_criterion(num, title, suite, budget, capsys):
    res = V.run_suite(suite)
    within = budget is None or res.seconds <= budget
    ok = res.passed and within
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {title}: "
            f"metric {res.max_residual:.3e} vs {res.tolerance:.3e}, {res.seconds:.1f}s")
    if budget is not None:
        line += f" (budget {budget:.0f}s)"
    with capsys.disabled():
        print("\n" + line)
    assert res.passed, f"{line}\n{res.detail}"
    assert within, line
