from __future__ import annotations

import itertools

import pytest
from hypothesis import given

from conftest import instances
from tbrkernel.maf import (
    EXCEEDS,
    AgreementForest,
    enumerate_mafs,
    exact_tbr_distance,
    exact_tbr_via_moves,
    forest_uses_edge,
    is_agreement_forest,
    maf_avoiding_edge,
    maf_preserving,
    maf_size,
    tbr_distance,
)
from tbrkernel.phylo import parse_newick, restrict
from tbrkernel.tight import all_trees, tight_instance


def forest(*blocks):
    return AgreementForest.of([set(b) for b in blocks])


class TestAgreementForest:
    def test_whole_set_on_identical_trees(self):
        t = parse_newick("((a,b),c,(d,e));")
        assert is_agreement_forest(t, t, forest("abcde"))

    def test_whole_set_on_quartet_swap(self, quartet):
        assert not is_agreement_forest(*quartet, forest("abcd"))
        assert is_agreement_forest(*quartet, forest("abc", "d"))

    def test_unique_maf_pair(self, unique_maf_pair):
        t1, t2 = unique_maf_pair
        target = forest("abcd", "efg")
        assert is_agreement_forest(t1, t2, target)
        assert enumerate_mafs(t1, t2) == [target]

    def test_block_embeddings_are_vertex_disjoint(self):
        t1 = parse_newick("((a,b),(c,d),(e,f));")
        t2 = parse_newick("((a,c),(b,d),(e,f));")
        for f in enumerate_mafs(t1, t2):
            for tree in (t1, t2):
                used = [tree.used_vertices(tree.mask(b)) for b in f.blocks]
                for x, y in itertools.combinations(used, 2):
                    assert x & y == 0

    def test_partition_is_checked(self, quartet):
        with pytest.raises(ValueError):
            is_agreement_forest(*quartet, forest("ab", "bc", "d"))


class TestExactDistance:
    def test_identical(self):
        t = parse_newick("((a,b),c,(d,e));")
        cert = exact_tbr_distance(t, t, 3)
        assert cert.k == 0 and cert.forest == forest("abcde")
        assert exact_tbr_via_moves(t, t, 3) == 0

    def test_quartet_swap(self, quartet):
        assert exact_tbr_distance(*quartet, 2).k == 1
        assert exact_tbr_via_moves(*quartet, 2) == 1

    def test_exceeds(self, quartet):
        assert exact_tbr_distance(*quartet, 0) == EXCEEDS
        assert exact_tbr_via_moves(*quartet, 0) == EXCEEDS
        assert tbr_distance(*quartet, 0) is None

    def test_negative_budget(self, quartet):
        with pytest.raises(ValueError):
            exact_tbr_distance(*quartet, -1)

    def test_tight_k3(self):
        inst = tight_instance(3)
        assert tbr_distance(inst.T, inst.Tprime, 3) == 3
        assert tbr_distance(inst.T, inst.Tprime, 2) is None

    def test_oracles_agree_on_all_five_taxon_pairs(self):
        trees = all_trees("abcde")
        assert len(trees) == 15
        for t1 in trees:
            for t2 in trees:
                assert tbr_distance(t1, t2, 2) == exact_tbr_via_moves(t1, t2, 2)

    @given(instances(5, 8, 3))
    def test_certificate_is_valid(self, pair):
        t1, t2 = pair
        cert = exact_tbr_distance(t1, t2, 5)
        assert len(cert.forest) == cert.k + 1
        assert is_agreement_forest(t1, t2, cert.forest)
        assert maf_size(t1, t2) == cert.k + 1

    @given(instances(5, 9, 3))
    def test_random_instance_distance_at_most_moves(self, pair):
        t1, t2 = pair
        # random_instance draws k_moves from the strategy; at most 3 moves were applied
        assert tbr_distance(t1, t2, 3) is not None

    @given(instances(4, 8, 2))
    def test_symmetry(self, pair):
        t1, t2 = pair
        assert tbr_distance(t1, t2, 4) == tbr_distance(t2, t1, 4)


class TestEnumeration:
    def test_identical_trees(self):
        t = parse_newick("((a,b),c,(d,e));")
        assert enumerate_mafs(t, t) == [forest("abcde")]

    def test_quartet_swap_forests(self, quartet):
        mafs = enumerate_mafs(*quartet)
        assert all(len(f) == 2 and is_agreement_forest(*quartet, f) for f in mafs)
        # each singleton removal works, and nothing else of size two does
        assert sorted(sorted(f.as_lists()) for f in mafs) == sorted(
            sorted(forest(set("abcd") - {x}, x).as_lists()) for x in "abcd")

    @given(instances(5, 8, 3))
    def test_every_listed_forest_is_maximum(self, pair):
        t1, t2 = pair
        k = tbr_distance(t1, t2, 5)
        for f in enumerate_mafs(t1, t2):
            assert len(f) == k + 1 and is_agreement_forest(t1, t2, f)

    @given(instances(5, 7, 2))
    def test_restrictions_agree_inside_blocks(self, pair):
        t1, t2 = pair
        for f in enumerate_mafs(t1, t2):
            for b in f.blocks:
                assert restrict(t1, b) == restrict(t2, b)


class TestWitnessQueries:
    def test_empty_family(self, quartet):
        assert maf_preserving(*quartet, []) is not None

    def test_pendant_two_chain_on_six_taxa(self):
        t1 = parse_newick("((a,b),c,(d,(e,f)));")
        t2 = parse_newick("((a,b),d,(c,(e,f)));")
        assert tbr_distance(t1, t2, 2) == 1
        f = maf_preserving(t1, t2, [("a", "b")])
        assert f is not None and f.preserves(("a", "b"))

    def test_family_validation(self, quartet):
        t = parse_newick("(x,(a,(b,(c,(y,z)))));")
        with pytest.raises(ValueError):
            maf_preserving(t, t, [("a", "b", "c"), ("c", "y")])

    def test_singleton_leaf_edge_is_avoided(self, quartet):
        t1, t2 = quartet
        leaf = t2.leaf("d")
        edge = (t2.parent("d"), leaf)
        f = maf_avoiding_edge(t1, t2, edge)
        assert f is not None and frozenset("d") in f.blocks
        assert not forest_uses_edge(t2, f, edge)

    def test_identical_trees_use_every_internal_edge(self):
        t = parse_newick("((a,b),c,(d,e));")
        internal = [e for e in t.edges if not t.is_leaf(e.u) and not t.is_leaf(e.v)]
        for e in internal:
            assert maf_avoiding_edge(t, t, e) is None

    def test_interrupted_chain_schema(self):
        # chain (a,b,c,d) of T; in T' the leaf s hangs between the parents of b and c
        t1 = parse_newick("((x,y),a,(b,(c,(d,(s,z)))));")
        t2 = parse_newick("((x,y),a,(b,(s,(c,(d,z)))));")
        from tbrkernel.reductions_new import find_interrupted_4chains

        found = find_interrupted_4chains(t1, t2)
        assert [ic.chain for ic in found] == [("a", "b", "c", "d")]
        edge = found[0].interrupter
        assert t2.label(edge.u) == "s" or t2.label(edge.v) == "s"
        assert maf_avoiding_edge(t1, t2, edge) is not None
