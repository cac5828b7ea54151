"""Acceptance criteria: one pass/fail line per criterion, each within its time budget.

Run directly (``python3 tests/test_acceptance.py``) to print the table without pytest.
"""

import sys

import pytest

from jointmoments import verify

SEED = 42
# seconds allowed per criterion
BUDGET = {1: 1, 2: 72, 3: 600, 4: 1800, 5: 600, 6: 60, 7: 300, 8: 120, 9: 1, 10: 120}
NAMES = {i: name for i, name, _, _ in verify.CHECKS}


def _record(result):
    from conftest import ACCEPTANCE_LINES

    within = result.seconds <= BUDGET[result.index]
    line = result.line() + ("" if within else f"  (over budget {BUDGET[result.index]} s)")
    ACCEPTANCE_LINES[result.index] = line
    print(line)
    print("   ", result.details)
    return within


@pytest.mark.parametrize("index", sorted(NAMES), ids=[f"{i:02d}-{NAMES[i].replace(' ', '_')}" for i in sorted(NAMES)])
def test_criterion(index):
    result = verify.run_check(index, seed=SEED)
    within = _record(result)
    assert result.passed, result.details
    assert within, f"took {result.seconds:.1f} s, budget {BUDGET[index]} s"


def main() -> int:
    ok = True
    for index in sorted(NAMES):
        result = verify.run_check(index, seed=SEED)
        within = result.seconds <= BUDGET[index]
        print(result.line() + ("" if within else "  (over budget)"), flush=True)
        ok &= result.passed and within
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
