"""Acceptance criteria, one test each, printing one PASS/FAIL line per criterion.

Criteria share a context (C9 audits every table the earlier ones produced),
so they run in declaration order against one module-scoped instance.
The lines are echoed in the terminal summary; ``-s`` shows them live.
"""

import subprocess
import sys

import pytest

from expsel import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def ctx():
    return acceptance.Context(workers=1)


@pytest.mark.parametrize("crit", acceptance.CRITERIA, ids=[c.key for c in acceptance.CRITERIA])
def test_criterion(crit, ctx):
    ok, line = acceptance.run_criterion(crit, ctx)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _selftest(workers):
    proc = subprocess.run(
        [sys.executable, "-m", "expsel.cli", "selftest", "--workers", str(workers)],
        capture_output=True,
    )
    return proc.returncode, proc.stdout


def test_selftest_output_is_byte_identical_across_workers():
    runs = {(w, rep): _selftest(w) for w in (1, 4, 8) for rep in (0, 1)}
    codes = {code for code, _ in runs.values()}
    outputs = {out for _, out in runs.values()}
    ok = codes == {0} and len(outputs) == 1
    line = f"{'PASS' if ok else 'FAIL'} selftest byte-identity: {len(runs)} runs, {len(outputs)} distinct output(s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert codes == {0}
    assert len(outputs) == 1
