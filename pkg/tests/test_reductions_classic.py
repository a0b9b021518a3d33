from __future__ import annotations

import pytest
from hypothesis import given

from conftest import instances
from tbrkernel.maf import tbr_distance
from tbrkernel.phylo import find_maximal_common_chains, is_common_chain, parse_newick
from tbrkernel.reductions_classic import (
    CLASSIC_REDUCERS,
    FreshLabels,
    ReductionEvent,
    extend_chain,
    reduce1_subtree,
    reduce2_chain,
)
from tbrkernel.suites import load_rule_fixture

# Hand-built pairs; distances before and after come from the cut-enumeration oracle.
SCHEMAS = {
    "R1": ("((a,b),c,(d,(e,f)));", "((a,b),e,(c,(d,f)));", 1, 1),
    "R2": ("((x,y),a,(b,(c,(d,(e,(f,(u,v)))))));", "((u,v),a,(b,(c,(d,(e,(f,(x,y)))))));", 2, 2),
    "R3": ("((a,b),c,(d,(e,(f,g))));", "(a,(b,c),(f,(d,(g,e))));", 2, 1),
    "R4": ("(a,(b,c),(x,(d,(e,f))));", "((c,x),b,(a,(e,(d,f))));", 2, 1),
    "R5": ("((x,b),a,((c,d),(e,(f,g))));", "((a,b),((x,d),c),(f,(e,g)));", 2, 1),
}


@pytest.mark.parametrize("rule", sorted(SCHEMAS))
def test_schema_instances(rule):
    s1, s2, before, after = SCHEMAS[rule]
    t1, t2 = parse_newick(s1), parse_newick(s2)
    r1, r2, event = CLASSIC_REDUCERS[rule](t1, t2, FreshLabels())
    assert event.rule == rule
    assert len(t1) - len(r1) == event.taxa_removed
    assert tbr_distance(t1, t2, 6) == before
    assert tbr_distance(r1, r2, 6) == after
    assert before == after + event.delta_k


@pytest.mark.parametrize("rule", ["R1", "R2", "R3", "R4", "R5", "R6", "R7"])
def test_fixture_instances_fire(rule):
    entries = load_rule_fixture()[rule]
    assert len(entries) >= 10
    for e in entries[:3]:
        t1 = parse_newick(e["T"], allow_reserved=True)
        t2 = parse_newick(e["Tprime"], allow_reserved=True)
        got = CLASSIC_REDUCERS[rule](t1, t2, FreshLabels.after(t1, t2))
        assert got is not None
        assert tbr_distance(got[0], got[1], 8) == e["d_after"]


def test_r1_fresh_label():
    t1, t2 = (parse_newick(s) for s in SCHEMAS["R1"][:2])
    r1, r2, event = reduce1_subtree(t1, t2, FreshLabels())
    assert "_z0" in r1.taxa and "_z0" in r2.taxa
    assert len(r1) == len(t1) - 1
    assert event.fresh == ("_z0",)


def test_r2_keeps_first_three():
    t1, t2 = (parse_newick(s) for s in SCHEMAS["R2"][:2])
    r1, _, event = reduce2_chain(t1, t2)
    assert event.taxa_removed == 3
    assert {"a", "b", "c"} <= r1.taxa and not {"d", "e", "f"} & r1.taxa


def test_no_rule_on_quartet_swap(quartet):
    assert reduce1_subtree(*quartet) is None


@pytest.mark.parametrize("rule", ["R3", "R4", "R5"])
def test_identical_trees_do_not_trigger_parameter_rules(rule):
    t = parse_newick("((a,b),c,(d,(e,(f,g))));")
    assert CLASSIC_REDUCERS[rule](t, t) is None


def test_short_chain_is_not_truncated():
    t1 = parse_newick("((x,y),a,(b,(c,(u,v))));")
    t2 = parse_newick("((u,v),a,(b,(c,(x,y))));")
    assert reduce2_chain(t1, t2) is None


def test_event_delta_is_validated():
    with pytest.raises(ValueError):
        ReductionEvent("R3", ("a", "b", "c"), 0, 3, "wrong delta")
    with pytest.raises(ValueError):
        ReductionEvent("R1", ("a", "b"), 1, 1, "wrong delta")


class TestExtendChain:
    def test_extend_then_truncate_restores(self):
        t1 = parse_newick("((x,y),e,(f,(g,(u,v))));")
        t2 = parse_newick("((u,v),e,(f,(g,(x,y))));")
        s1, s2 = extend_chain(t1, t2, ("e", "f", "g"), ["h"], "right")
        assert is_common_chain(s1, s2, ("e", "f", "g", "h"))
        r1, r2, _ = reduce2_chain(s1, s2)
        assert (r1, r2) == (t1, t2)

    def test_fresh_labels_required(self):
        t1 = parse_newick("((x,y),e,(f,(g,(u,v))));")
        with pytest.raises(ValueError):
            extend_chain(t1, t1, ("e", "f", "g"), ["x"])

    @given(instances(6, 12, 3))
    def test_extension_preserves_distance(self, pair):
        t1, t2 = pair
        chains = [c.taxa for c, _ in find_maximal_common_chains(t1, t2, 3)]
        if not chains:
            return
        try:
            s1, s2 = extend_chain(t1, t2, chains[0], ["n1", "n2"], "left")
        except ValueError:
            return
        assert tbr_distance(s1, s2, 5) == tbr_distance(t1, t2, 5)


@given(instances(6, 12, 4))
def test_classic_rules_preserve_distance_accounting(pair):
    t1, t2 = pair
    for rule, reducer in CLASSIC_REDUCERS.items():
        got = reducer(t1, t2, FreshLabels.after(t1, t2))
        if got is None:
            continue
        r1, r2, event = got
        assert len(t1) - len(r1) == event.taxa_removed
        assert r1.taxa == r2.taxa
        assert tbr_distance(t1, t2, 6) == tbr_distance(r1, r2, 6) + event.delta_k
