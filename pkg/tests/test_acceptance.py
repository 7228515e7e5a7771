"""Every acceptance criterion at its stated tolerance, one test per criterion.

A pass/fail line per criterion is printed in the terminal summary (and when
this file is run as a script).
"""
import pytest

from crossstitch.validation import CRITERIA, Session

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []


@pytest.fixture(scope="module")
def session():
    return Session()


def _summary(crit, checks) -> str:
    status = "PASS" if all(c.passed for c in checks) else "FAIL"
    worst = [c for c in checks if not c.passed]
    detail = f"; failing: {', '.join(c.name for c in worst)}" if worst else ""
    return f"{crit.key:>3} {status}  {crit.title} ({len(checks)} checks{detail})"


@pytest.mark.parametrize("crit", CRITERIA, ids=[c.key for c in CRITERIA])
def test_criterion(crit, session):
    checks = crit.run(session)
    ACCEPTANCE_LINES.append(_summary(crit, checks))
    print(_summary(crit, checks))
    for c in checks:
        print("    " + c.line())
    assert checks, "criterion produced no checks"
    failing = [c.line() for c in checks if not c.passed]
    assert not failing, "\n".join(failing)


if __name__ == "__main__":
    s = Session()
    for crit in CRITERIA:
        checks = crit.run(s)
        print(_summary(crit, checks))
        for c in checks:
            print("    " + c.line())
