"""Acceptance gate: the nine verification criteria at their default settings.

Each criterion prints one ``[PASS]``/``[FAIL]`` line (shown even without ``-s``).
Run just this file with ``pytest tests/test_acceptance.py -v``.
"""

import pytest

from hodgeflow import verify

CFG = verify.VerifyConfig()


@pytest.mark.parametrize("n", sorted(verify.CRITERIA))
def test_criterion(n, capsys):
    r = verify.run_criterion(n, CFG)
    with capsys.disabled():
        print("\n" + r.line())
        for c in r.checks:
            if not c.passed:
                print(f"    {c.name} = {c.value:.4g} (want {c.op} {c.threshold:.4g})")
    assert not r.error, r.error
    assert all(c.passed for c in r.checks), [c.name for c in r.checks if not c.passed]
    assert r.within_budget, f"{r.runtime:.1f} s over {r.budget:.0f} s budget"
