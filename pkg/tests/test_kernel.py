from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances
from tbrkernel.kernel import (
    check_kernel_bound,
    kernel_bound,
    kernel_distance,
    kernelize,
    replay_trace,
)
from tbrkernel.maf import tbr_distance
from tbrkernel.phylo import parse_newick
from tbrkernel.reductions_classic import PARAMETER_RULES, pendant_in_both
from tbrkernel.tight import random_instance, tight_instance


def test_identical_trees_collapse():
    t = parse_newick("((a,b),(c,d),((e,f),(g,h)));")
    res = kernelize(t, t)
    assert res.offset == 0
    assert res.kernel_taxa < 4
    assert kernel_distance(res, 2) == 0
    assert all(e.rule == "R1" for e in res.trace)


def test_tight_instance_is_irreducible():
    inst = tight_instance(3)
    res = kernelize(inst.T, inst.Tprime)
    assert res.trace == []
    assert (res.T_r, res.Tprime_r) == (inst.T, inst.Tprime)


def test_twenty_taxa_three_moves():
    t1, t2 = random_instance(20, 3, 11)
    res = kernelize(t1, t2)
    d = kernel_distance(res, 3)
    assert d is not None
    assert d + res.offset == tbr_distance(t1, t2, 3)


@given(instances(6, 14, 4))
def test_distance_accounting(pair):
    t1, t2 = pair
    res = kernelize(t1, t2)
    assert res.offset == sum(1 for e in res.trace if e.rule in PARAMETER_RULES)
    assert res.kernel_taxa <= res.original_taxa
    assert tbr_distance(t1, t2, 6) == kernel_distance(res, 6) + res.offset


@given(instances(6, 18, 4))
def test_replay_reproduces_kernel(pair):
    res = kernelize(*pair)
    assert replay_trace(res) == (res.T_r, res.Tprime_r)


@given(instances(6, 18, 4))
def test_fixed_point_has_no_rule_left(pair):
    res = kernelize(*pair)
    if res.kernel_taxa >= 4:
        again = kernelize(res.T_r, res.Tprime_r)
        assert again.trace == []
        assert not pendant_in_both(res.T_r, res.Tprime_r)


@given(st.integers(0, 10**6))
def test_deterministic(seed):
    t1, t2 = random_instance(16, 4, seed)
    assert kernelize(t1, t2).dumps() == kernelize(t1, t2).dumps()


def test_fresh_labels_do_not_collide():
    t1, t2 = random_instance(20, 2, 5)
    res = kernelize(t1, t2)
    fresh = [lab for e in res.trace for lab in e.fresh]
    assert len(fresh) == len(set(fresh))


def test_bound_formula():
    assert kernel_bound(3) == 19
    assert kernel_bound(8) == 64


def test_bound_on_tight_instance():
    inst = tight_instance(3)
    res = kernelize(inst.T, inst.Tprime)
    assert res.kernel_taxa == 18 == 9 * 3 - 9
    assert check_kernel_bound(res, 3)


def test_bound_vacuous_for_small_distance():
    t1, t2 = random_instance(12, 2, 3)
    res = kernelize(t1, t2)
    assert check_kernel_bound(res, 2)
    assert any("k=2" in note for note in res.notes)
    with pytest.raises(ValueError):
        check_kernel_bound(res, -1)


def test_unknown_skip_rule():
    t1, t2 = random_instance(8, 1, 0)
    with pytest.raises(ValueError):
        kernelize(t1, t2, skip=["R11"])


def test_different_taxa_rejected():
    with pytest.raises(ValueError):
        kernelize(parse_newick("(a,b,(c,d));"), parse_newick("(a,b,(c,e));"))
