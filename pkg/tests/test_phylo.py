from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances
from tbrkernel.phylo import (
    ISOLATED,
    NewickError,
    PhyloTree,
    TreeError,
    chain_in,
    cherries,
    cpt_eligible,
    embedding,
    find_maximal_common_chains,
    find_maximal_common_pendant_subtrees,
    is_chain,
    parse_instance,
    parse_newick,
    restrict,
    tbr_move,
    tbr_neighbors,
    trees_equal,
    write_newick,
)
from tbrkernel.tight import random_tree, taxon_labels


class TestNewick:
    def test_quartet_shape(self):
        t = parse_newick("(a,b,(c,d));")
        assert len(t) == 4
        assert sum(1 for v in range(t.n_vertices) if not t.is_leaf(v)) == 2

    def test_five_taxa_cherries(self):
        t = parse_newick("(a,(b,c),(d,e));")
        assert cherries(t) == [("b", "c"), ("d", "e")]
        assert sorted(t.degree(v) for v in range(t.n_vertices)) == [1] * 5 + [3] * 3

    def test_two_taxa_rejected(self):
        with pytest.raises(NewickError, match="degree 2"):
            parse_newick("(a,b);")

    def test_canonical_output(self):
        assert write_newick(parse_newick("((c,d),b,a);")) == "(a,b,(c,d));"
        assert write_newick(parse_newick("(a,b,c);")) == "(a,b,c);"

    def test_rooted_input_is_unrooted(self):
        assert parse_newick("((a,b),(c,d));") == parse_newick("(a,b,(c,d));")

    @pytest.mark.parametrize("bad, fragment", [
        ("(a,b,(c,d))", "';'"),
        ("(a,b,(c,d)e);", "internal"),
        ("(a,b,(c,a));", "duplicate"),
        ("(a:1,b,(c,d));", "branch lengths"),
        ("(a,b,(c,d,e));", "binary"),
        ("(_z1,b,(c,d));", "reserved"),
    ])
    def test_rejections(self, bad, fragment):
        with pytest.raises(NewickError) as info:
            parse_newick(bad)
        assert fragment.strip("'") in str(info.value)

    def test_instance_error_has_line_and_column(self):
        with pytest.raises(NewickError) as info:
            parse_instance("(a,b,(c,d));\n(a,c,(b,d);\n")
        assert info.value.line == 2
        assert "line 2" in str(info.value) and "column" in str(info.value)

    def test_instance_taxa_must_match(self):
        with pytest.raises(NewickError, match="taxon sets"):
            parse_instance("(a,b,(c,d));\n(a,b,(c,e));\n")

    @given(st.integers(3, 15), st.integers(0, 10**6))
    def test_roundtrip(self, n, seed):
        import random

        t = random_tree(taxon_labels(n), random.Random(seed))
        assert parse_newick(write_newick(t)) == t


class TestTreeLaws:
    @given(instances(4, 14, 0))
    def test_vertex_and_edge_counts(self, pair):
        t, _ = pair
        n = len(t)
        assert t.n_vertices == 2 * n - 2
        assert len(t.edges) == 2 * n - 3
        for v in range(t.n_vertices):
            assert t.degree(v) in (1, 3)
            assert t.is_leaf(v) == (t.degree(v) == 1)

    def test_parallel_edges_rejected(self):
        with pytest.raises(TreeError):
            PhyloTree.from_edges([(0, 1), (0, 1)], {1: "a"})

    def test_rotation_equality(self):
        a = parse_newick("((a,b),(c,(d,e)),f);")
        b = parse_newick("(f,((e,d),c),(b,a));")
        assert trees_equal(a, b)
        assert trees_equal(a, a)
        assert not trees_equal(*map(parse_newick, ("(a,b,(c,d));", "(a,c,(b,d));")))


class TestRestrict:
    def test_caterpillar(self):
        t = parse_newick("(a,(b,(c,(d,e))));")
        assert write_newick(restrict(t, "ace")) == "(a,c,e);"

    def test_identity(self):
        t = parse_newick("(a,(b,(c,(d,e))));")
        assert restrict(t, t.taxa) == t

    def test_single_taxon(self):
        r = restrict(parse_newick("(a,b,(c,d));"), "a")
        assert len(r) == 1

    def test_embedding_of_cherry(self):
        t = parse_newick("(a,b,(c,d));")
        emb = embedding(t, "cd")
        assert len(emb) == 2
        assert all(t.is_leaf(e.u) or t.is_leaf(e.v) for e in emb)
        assert embedding(t, t.taxa) == set(t.edges)

    @given(instances(5, 12, 0), st.data())
    def test_restriction_is_binary_on_subset(self, pair, data):
        t, _ = pair
        ys = data.draw(st.sets(st.sampled_from(sorted(t.taxa)), min_size=3))
        r = restrict(t, ys)
        assert r.taxa == frozenset(ys)
        assert all(r.degree(v) in (1, 3) for v in range(r.n_vertices))


class TestCommonStructure:
    def test_quartet_swap_has_no_common_pendant_subtree(self, quartet):
        assert find_maximal_common_pendant_subtrees(*quartet) == []

    def test_quartet_swap_chains_follow_the_walk_definition(self, quartet):
        # With four taxa every parent walk is short enough that (a,b,d) is a chain of both trees.
        t1, t2 = quartet
        assert is_chain(t1, ("a", "b", "d")) and is_chain(t2, ("a", "b", "d"))
        assert chain_in(t1, ("a", "b", "d")).pendant_left
        assert chain_in(t2, ("a", "b", "d")).pendant_right

    def test_shared_cherry_only(self):
        t1 = parse_newick("((a,b),c,(d,(e,f)));")
        t2 = parse_newick("((a,b),e,(c,(d,f)));")
        assert find_maximal_common_pendant_subtrees(t1, t2) == [frozenset("ab")]

    def test_common_six_chain(self):
        t1 = parse_newick("((x,y),a,(b,(c,(d,(e,(f,(u,v)))))));")
        t2 = parse_newick("((u,v),a,(b,(c,(d,(e,(f,(x,y)))))));")
        chains = find_maximal_common_chains(t1, t2, 3)
        assert [c.taxa for c, _ in chains] == [("a", "b", "c", "d", "e", "f")]

    def test_cpt_eligibility(self):
        t1 = parse_newick("((a,b),c,(d,(e,f)));")
        t2 = parse_newick("((a,b),e,(c,(d,f)));")
        assert cpt_eligible(t1, t2, ("a", "b"))
        t3 = parse_newick("(x,(a,(b,(c,(y,z)))));")
        t4 = parse_newick("(y,(a,(b,(c,(x,z)))));")
        assert cpt_eligible(t3, t4, ("a", "b", "c"))
        assert not cpt_eligible(t3, t4, ("a", "b"))

    def test_chain_orientation_and_pendancy(self):
        t = parse_newick("((a,b),c,(d,(e,f)));")
        assert is_chain(t, ("a", "b", "c", "d"))
        c = chain_in(t, ("a", "b", "c", "d"))
        assert c.pendant_left and not c.pendant_right


class TestTbrMove:
    def test_reattach_in_place(self):
        t = parse_newick("((a,b),c,(d,(e,f)));")
        leaf = t.leaf("a")
        p = t.parent("a")
        others = [w for w in t.neighbors(p) if w != leaf]
        assert tbr_move(t, (p, leaf), (p, others[0]), ISOLATED) == t

    def test_quartet_swap_is_one_move(self, quartet):
        t1, t2 = quartet
        assert t2 in tbr_neighbors(t1)

    @given(instances(6, 12, 0), st.integers(0, 10**6))
    def test_random_moves_keep_tree_laws(self, pair, seed):
        import random

        from tbrkernel.tight import random_tbr_move

        t, _ = pair
        out = random_tbr_move(t, random.Random(seed))
        assert out.taxa == t.taxa
        assert out.n_vertices == t.n_vertices
        assert all(out.degree(v) in (1, 3) for v in range(out.n_vertices))
        assert out == t or out in tbr_neighbors(t)

    def test_neighbourhood_matches_distance_one(self):
        from tbrkernel.maf import tbr_distance
        from tbrkernel.tight import all_trees

        t = parse_newick("(a,b,(c,(d,e)));")
        at_one = {u for u in all_trees("abcde") if tbr_distance(t, u, 1) == 1}
        assert tbr_neighbors(t) == at_one
        assert len(at_one) == 12
