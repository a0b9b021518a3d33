from __future__ import annotations

import random

import pytest
from hypothesis import given

from conftest import instances
from tbrkernel.maf import is_agreement_forest, tbr_distance
from tbrkernel.phylo import parse_newick
from tbrkernel.tight import (
    BinaryCharacter,
    LadderGenerator,
    fitch_score,
    instance_newick,
    mp_lower_bound,
    random_instance,
    tight_instance,
)


class TestFitch:
    def test_constant_character(self):
        t = parse_newick("((a,b),c,(d,e));")
        assert fitch_score(t, {x: 0 for x in "abcde"}) == 0

    def test_cherry_split(self):
        t = parse_newick("((a,b),c,(d,e));")
        assert fitch_score(t, {"a": 1, "b": 1, "c": 0, "d": 0, "e": 0}) == 1

    def test_alternating_caterpillar(self):
        t = parse_newick("(a,(b,(c,(d,(e,f)))));")
        f = dict(zip("abcdef", [0, 1, 0, 1, 0, 1]))
        assert fitch_score(t, f) == 3

    @given(instances(5, 12, 0))
    def test_rooting_invariance(self, pair):
        t, _ = pair
        rng = random.Random(len(t))
        f = {x: rng.randint(0, 1) for x in t.taxa}
        base = fitch_score(t, f)
        internal = [v for v in range(t.n_vertices) if not t.is_leaf(v)]
        for root in rng.sample(internal, min(3, len(internal))):
            assert fitch_score(t, f, root=root) == base

    def test_character_must_be_binary(self):
        with pytest.raises(ValueError):
            BinaryCharacter({"a": 2})

    def test_identical_trees_bound(self):
        t = parse_newick("((a,b),c,(d,e));")
        assert mp_lower_bound(t, t, {"a": 1, "b": 0, "c": 1, "d": 0, "e": 1}) == 0

    @given(instances(5, 9, 3))
    def test_bound_never_exceeds_distance(self, pair):
        t1, t2 = pair
        rng = random.Random(len(t1))
        d = tbr_distance(t1, t2, 6)
        for _ in range(4):
            f = {x: rng.randint(0, 1) for x in t1.taxa}
            assert mp_lower_bound(t1, t2, f) <= d


class TestGenerator:
    @pytest.mark.parametrize("k", range(3, 9))
    def test_generator_law(self, k):
        gen = LadderGenerator.build(k)
        degrees = gen.degrees()
        assert len(degrees) == 2 * k - 2
        assert set(degrees.values()) == {3}
        assert len(gen.sides) == 3 * (k - 1)
        assert gen.multi_edge_pairs() == 2
        assert len(gen.taxa) == 9 * k - 9


class TestTightInstances:
    @pytest.mark.parametrize("k", range(3, 9))
    def test_certificates(self, k):
        inst = tight_instance(k)
        assert len(inst.T) == 9 * k - 9
        assert inst.lf_T == 1 and inst.lf_Tprime >= k + 1
        assert mp_lower_bound(inst.T, inst.Tprime, inst.character) >= k
        assert len(inst.forest) == k + 1
        assert is_agreement_forest(inst.T, inst.Tprime, inst.forest)

    def test_k3_distance(self):
        inst = tight_instance(3)
        assert tbr_distance(inst.T, inst.Tprime, 3) == 3

    def test_certificate_json(self):
        data = tight_instance(5).to_json()
        assert data["k"] == 5 and len(data["forest_blocks"]) == 6
        assert set(data["character"].values()) == {0, 1}

    def test_small_k_rejected(self):
        with pytest.raises(ValueError):
            tight_instance(2)

    def test_deterministic(self):
        a, b = tight_instance(6), tight_instance(6)
        assert instance_newick(a.T, a.Tprime) == instance_newick(b.T, b.Tprime)
        assert a.to_json() == b.to_json()


class TestRandomInstances:
    def test_zero_moves(self):
        t1, t2 = random_instance(10, 0, 4)
        assert t1 == t2

    def test_seeded(self):
        assert instance_newick(*random_instance(15, 3, 9)) == instance_newick(*random_instance(15, 3, 9))

    @given(instances(5, 9, 3))
    def test_distance_at_most_moves(self, pair):
        assert tbr_distance(*pair, 3) is not None

    def test_too_small(self):
        with pytest.raises(ValueError):
            random_instance(3, 1, 0)
