"""Regenerate ``src/tbrkernel/data/rule_instances.json``.

Scans seeded random instances, records the state just before each rule firing (and
Operation P applications at states where Reductions 1-8 do not apply), then freezes
the oracle distances before and after. Usage:

    python3 tools/make_rule_fixture.py [--seeds N] [--per-rule M]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from tbrkernel.kernel import apply_event, kernelize
from tbrkernel.maf import tbr_distance
from tbrkernel.phylo import parse_newick, write_newick
from tbrkernel.reductions_classic import classic_applicable
from tbrkernel.reductions_new import CATALOG, _eligible_p_tuples, detect_r8
from tbrkernel.suites import DELTA_RULES, fire_rule
from tbrkernel.tight import random_instance

MAX_TAXA = 14
OUT = Path(__file__).resolve().parents[1] / "src" / "tbrkernel" / "data" / "rule_instances.json"


def harvest(seeds: int, per_rule: int) -> dict[str, list[dict]]:
    found: dict[str, list[dict]] = {r: [] for r in DELTA_RULES}
    used_seeds: dict[str, set[int]] = {r: set() for r in DELTA_RULES}

    def keep(rule, seed, a, b, witness=()):
        if len(a) > MAX_TAXA or len(found[rule]) >= per_rule or seed in used_seeds[rule]:
            return
        used_seeds[rule].add(seed)
        entry = {"seed": seed, "T": write_newick(a), "Tprime": write_newick(b)}
        if witness:
            entry["witness"] = list(witness)
        found[rule].append(entry)

    for seed in range(seeds):
        if all(len(v) >= per_rule for v in found.values()):
            break
        t1, t2 = random_instance(8 + seed % 13, 2 + seed % 4, seed)
        res = kernelize(t1, t2)
        a, b = t1, t2
        states = []
        for event in res.trace:
            keep(event.rule, seed, a, b)
            states.append((a, b))
            a, b = apply_event(a, b, event)
        states.append((a, b))
        if len(found["P"]) < per_rule:
            for s1, s2 in states:
                if len(s1) > MAX_TAXA or len(s1) < 4:
                    continue
                if classic_applicable(s1, s2) or detect_r8(s1, s2):
                    continue
                tuples = _eligible_p_tuples(s1, s2, CATALOG)
                if tuples:
                    keep("P", seed, s1, s2, tuples[0][0])
                    break
        if seed % 1000 == 0:
            print(seed, {r: len(v) for r, v in found.items()}, file=sys.stderr)
    return found


def freeze(found: dict[str, list[dict]], k_max: int = 8) -> dict[str, list[dict]]:
    for rule, entries in found.items():
        for e in entries:
            t1 = parse_newick(e["T"], allow_reserved=True)
            t2 = parse_newick(e["Tprime"], allow_reserved=True)
            r1, r2, delta = fire_rule(rule, t1, t2, tuple(e.get("witness", ())))
            e["d_before"] = tbr_distance(t1, t2, k_max)
            e["d_after"] = tbr_distance(r1, r2, k_max)
            e["delta_k"] = delta
            assert e["d_before"] == e["d_after"] + delta, (rule, e)
    return found


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=60000)
    ap.add_argument("--per-rule", type=int, default=12)
    ns = ap.parse_args()
    found = harvest(ns.seeds, ns.per_rule)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(found, indent=1, sort_keys=True) + "\n")
    data = freeze(found)
    OUT.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print({r: len(v) for r, v in data.items()})


if __name__ == "__main__":
    main()
