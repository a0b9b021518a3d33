"""The eight acceptance criteria, one test each, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary table alone.
"""

from __future__ import annotations

import os
import subprocess
import sys
import time

import pytest

from tbrkernel.suites import (
    DELTA_RULES,
    MIN_PER_RULE,
    bound_suite,
    cpt_suite,
    deltas_suite,
    eligibility_suite,
    interrupter_suite,
    oracle_suite,
    tight_suite,
)

SEED = 0


def criterion_1():
    start = time.perf_counter()
    res = oracle_suite(sizes=(5, 6), k_max=2)
    elapsed = time.perf_counter() - start
    ok = res.passed and res.checked == 15**2 + 105**2 and elapsed < 300
    return ok, f"{res.checked} pairs, {len(res.failures)} disagreements, {elapsed:.1f}s"


def criterion_2():
    res = deltas_suite()
    return res.passed, f"{res.detail}; {len(res.failures)} failures"


def criterion_3():
    res = bound_suite(seed=SEED, count=200)
    return res.passed, res.detail + f"; {len(res.failures)} violations"


def criterion_4():
    start = time.perf_counter()
    res = tight_suite(ks=range(3, 9))
    return res.passed, f"k=3..8, {len(res.failures)} failures, {time.perf_counter() - start:.1f}s"


def criterion_5():
    res = cpt_suite(seed=SEED, count=200)
    return res.passed, f"{res.checked} pairs, {res.detail}, {len(res.failures)} failures"


def criterion_6():
    res = interrupter_suite(seed=SEED, count=50)
    return res.passed, f"{res.checked} instances, {res.detail}, {len(res.failures)} failures"


def criterion_7():
    res = eligibility_suite(seed=SEED, min_tuples=500)
    return res.passed and res.checked >= 500, f"{res.checked} tuples, {res.detail}, {len(res.failures)} unsound"


_DETERMINISM_SCRIPT = """
from tbrkernel.kernel import kernelize
from tbrkernel.tight import random_instance, tight_instance, instance_newick
import json
for seed in range(5):
    print(kernelize(*random_instance(18, 4, seed)).dumps())
for k in (3, 5, 8):
    inst = tight_instance(k)
    print(instance_newick(inst.T, inst.Tprime) + json.dumps(inst.to_json(), sort_keys=True))
"""


def criterion_8():
    outputs = []
    for _ in range(2):
        env = dict(os.environ, TBRKERN_THREADS="2", PYTHONHASHSEED=str(len(outputs) + 1))
        run = subprocess.run([sys.executable, "-c", _DETERMINISM_SCRIPT], capture_output=True,
                             text=True, env=env, check=True)
        outputs.append(run.stdout)
    return outputs[0] == outputs[1] and bool(outputs[0]), f"{len(outputs[0])} bytes per run"


CRITERIA = {
    1: ("oracle self-consistency", criterion_1),
    2: ("per-rule distance deltas", criterion_2),
    3: ("kernel bound", criterion_3),
    4: ("tightness", criterion_4),
    5: ("chain preservation", criterion_5),
    6: ("interrupted chains", criterion_6),
    7: ("eligibility soundness", criterion_7),
    8: ("determinism", criterion_8),
}


def _report(number: int) -> tuple[bool, str]:
    name, fn = CRITERIA[number]
    ok, detail = fn()
    return ok, f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = _report(number)
    with capsys.disabled():
        print(f"\n{line}")
    assert ok, line


def test_fixture_covers_every_rule():
    from tbrkernel.suites import load_rule_fixture

    data = load_rule_fixture()
    for rule in DELTA_RULES:
        assert len(data[rule]) >= MIN_PER_RULE, rule


if __name__ == "__main__":
    results = [_report(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
