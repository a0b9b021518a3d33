"""Tight instances on the ladder generator, Fitch scoring, and random instances.

The ladder generator is the 2 x (k+1) grid with its four corners suppressed: top
vertices u_1..u_{k-1}, bottom vertices w_1..w_{k-1}, rungs 0..k (rungs 0 and 1 both join
u_1 to w_1, rungs k-1 and k both join u_{k-1} to w_{k-1}), and horizontal sides between
consecutive columns. Each side is subdivided three times and a taxon hangs off each
subdivision vertex. A tree is obtained by deleting one edge on k of the rung paths.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .maf import AgreementForest, DistanceCertificate, is_agreement_forest
from .phylo import (
    PhyloTree,
    add_edge,
    build_tree,
    chain_in,
    chains_of_length,
    cherries,
    find_maximal_common_chains,
    find_maximal_common_pendant_subtrees,
    fresh_vertex,
    is_common_chain,
    subdivide,
    tbr_move,
    tree_graph,
    write_newick,
)

TAXA_PER_SIDE = 3


class TightSearchError(RuntimeError):
    """No breakpoint placement satisfied every required property."""


@dataclass(frozen=True)
class BinaryCharacter:
    assignment: Mapping[str, int]

    def __post_init__(self):
        bad = {v for v in self.assignment.values() if v not in (0, 1)}
        if bad:
            raise ValueError(f"character states must be 0 or 1, got {sorted(bad)}")

    def __getitem__(self, taxon: str) -> int:
        return self.assignment[taxon]

    def as_dict(self) -> dict[str, int]:
        return {t: self.assignment[t] for t in sorted(self.assignment)}


# ---------------------------------------------------------------------------
# Fitch
# ---------------------------------------------------------------------------


def _character(tree: PhyloTree, f: BinaryCharacter | Mapping[str, int]) -> Mapping[str, int]:
    states = f.assignment if isinstance(f, BinaryCharacter) else f
    missing = tree.taxa - set(states)
    if missing:
        raise ValueError(f"character is undefined on {sorted(missing)}")
    return states


def fitch_score(tree: PhyloTree, f: BinaryCharacter | Mapping[str, int], root: int = 0) -> int:
    """Parsimony score of a binary character by the Fitch bottom-up pass."""
    states = _character(tree, f)
    if len(tree) == 1:
        return 0
    order = [root]
    parent = {root: -1}
    for v in order:
        for w in tree.neighbors(v):
            if w != parent[v]:
                parent[w] = v
                order.append(w)
    sets: dict[int, int] = {}
    score = 0
    for v in reversed(order):
        lab = tree.label(v)
        kids = [w for w in tree.neighbors(v) if w != parent[v]]
        if lab is not None:
            own = 1 << states[lab]
            if not kids:
                sets[v] = own
                continue
            kids_sets = [own] + [sets[w] for w in kids]
        else:
            kids_sets = [sets[w] for w in kids]
        # pairwise Fitch merge; binary states make this exact for any arity
        acc = kids_sets[0]
        for s in kids_sets[1:]:
            if acc & s:
                acc &= s
            else:
                acc |= s
                score += 1
        sets[v] = acc
    return score


def mp_lower_bound(t1: PhyloTree, t2: PhyloTree, f: BinaryCharacter | Mapping[str, int]) -> int:
    return abs(fitch_score(t1, f) - fitch_score(t2, f))


# ---------------------------------------------------------------------------
# Ladder generator
# ---------------------------------------------------------------------------


@dataclass
class LadderGenerator:
    k: int
    vertices: list[tuple]
    sides: list[tuple[str, int, tuple, tuple]]          # (kind, index, end1, end2)
    side_taxa: dict[tuple[str, int], tuple[str, str, str]] = field(default_factory=dict)

    @classmethod
    def build(cls, k: int) -> "LadderGenerator":
        if k < 3:
            raise ValueError("the ladder needs k >= 3")
        n = k - 1
        top = [("u", j) for j in range(1, n + 1)]
        bot = [("w", j) for j in range(1, n + 1)]
        sides = []
        for j in range(0, k + 1):
            col = min(max(j, 1), n)
            sides.append(("rung", j, ("u", col), ("w", col)))
        for row in ("u", "w"):
            for j in range(1, n):
                sides.append(("top" if row == "u" else "bottom", j, (row, j), (row, j + 1)))
        gen = cls(k, top + bot, sides)
        for kind, j, _, _ in sides:
            prefix = {"rung": "r", "top": "t", "bottom": "s"}[kind]
            gen.side_taxa[(kind, j)] = tuple(f"{prefix}{j:02d}{i}" for i in (1, 2, 3))
        return gen

    @property
    def taxa(self) -> list[str]:
        return sorted(t for triple in self.side_taxa.values() for t in triple)

    def degrees(self) -> dict[tuple, int]:
        deg = {v: 0 for v in self.vertices}
        for _, _, a, b in self.sides:
            deg[a] += 1
            deg[b] += 1
        return deg

    def multi_edge_pairs(self) -> int:
        seen: dict[frozenset, int] = {}
        for _, _, a, b in self.sides:
            key = frozenset((a, b))
            seen[key] = seen.get(key, 0) + 1
        return sum(1 for c in seen.values() if c == 2)

    def network(self) -> tuple[dict, dict, dict]:
        """Decorated network: adjacency, leaf labels, and the path of each side."""
        adj: dict = {v: [] for v in self.vertices}
        labels: dict = {}
        paths: dict = {}
        for kind, j, a, b in self.sides:
            chain = [a] + [(kind, j, i) for i in (1, 2, 3)] + [b]
            paths[(kind, j)] = chain
            for x, y in zip(chain, chain[1:]):
                adj.setdefault(x, []).append(y)
                adj.setdefault(y, []).append(x)
            for i, lab in zip((1, 2, 3), self.side_taxa[(kind, j)]):
                leaf = ("leaf", lab)
                adj[(kind, j, i)].append(leaf)
                adj[leaf] = [(kind, j, i)]
                labels[leaf] = lab
        return adj, labels, paths


def _tree_without(adj: Mapping, labels: Mapping, removed: set[frozenset]) -> PhyloTree:
    g = {v: [w for w in nb if frozenset((v, w)) not in removed] for v, nb in adj.items()}
    return build_tree(g, dict(labels))


def _rung_cut(paths: Mapping, j: int, pos: int) -> frozenset:
    chain = paths[("rung", j)]
    return frozenset((chain[pos], chain[pos + 1]))


@dataclass
class TightInstance:
    k: int
    T: PhyloTree
    Tprime: PhyloTree
    character: BinaryCharacter
    forest: AgreementForest
    generator: LadderGenerator
    placement: tuple[int, ...]
    lf_T: int
    lf_Tprime: int

    def certificate(self) -> DistanceCertificate:
        return DistanceCertificate(self.k, self.forest, self.character.as_dict(), self.lf_T, self.lf_Tprime)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "character": self.character.as_dict(),
            "lf_T": self.lf_T,
            "lf_Tprime": self.lf_Tprime,
            "forest_blocks": self.forest.as_lists(),
            "placement": list(self.placement),
        }


def _placements(k: int) -> Iterator[tuple[int, ...]]:
    """Rung break levels L_0..L_k in {1,2} with L_0 = L_1, alternating pattern first."""
    alternating = [1 if j % 2 else 2 for j in range(k + 1)]
    alternating[0] = alternating[1]
    yield tuple(alternating)
    for rest in itertools.product((1, 2), repeat=k):
        cand = (rest[0],) + rest
        if list(cand) != alternating:
            yield cand


def _build(k: int, levels: Sequence[int]) -> tuple:
    gen = LadderGenerator.build(k)
    adj, labels, paths = gen.network()
    keep_t, keep_tp = k, k - 1
    cuts_t = {_rung_cut(paths, j, levels[j]) for j in range(k + 1) if j != keep_t}
    cuts_tp = {_rung_cut(paths, j, 3 - levels[j]) for j in range(k + 1) if j != keep_tp}
    t = _tree_without(adj, labels, cuts_t)
    tp = _tree_without(adj, labels, cuts_tp)
    states = {}
    for (kind, j), triple in gen.side_taxa.items():
        for i, lab in enumerate(triple, start=1):
            if kind == "top":
                states[lab] = 0
            elif kind == "bottom":
                states[lab] = 1
            else:
                states[lab] = 0 if i <= levels[j] else 1
    # blocks: components of the network once both trees' cut edges are removed
    removed = cuts_t | cuts_tp
    g = {v: [w for w in nb if frozenset((v, w)) not in removed] for v, nb in adj.items()}
    seen: set = set()
    blocks = []
    for leaf in sorted(labels, key=lambda x: labels[x]):
        if leaf in seen:
            continue
        comp = {leaf}
        stack = [leaf]
        while stack:
            v = stack.pop()
            for w in g[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        blocks.append({labels[v] for v in comp if v in labels})
    return gen, t, tp, BinaryCharacter(states), AgreementForest.of(blocks)


def tight_properties(k: int, t: PhyloTree, tp: PhyloTree, f: BinaryCharacter,
                     forest: AgreementForest, *, run_kernel: bool = True) -> dict[str, bool]:
    """Every property the tight family is required to have, evaluated separately."""
    pendant_3 = []
    for tree in (t, tp):
        found = {frozenset(c) for c in chains_of_length(tree, 3) if chain_in(tree, c).pendant}
        pendant_3.append(found)
    props = {
        "taxa": len(t) == 9 * k - 9,
        "no_common_pendant_subtree": not find_maximal_common_pendant_subtrees(t, tp),
        "no_common_chain_4": not find_maximal_common_chains(t, tp, 4),
        "one_pendant_3chain_each": all(len(p) == 1 for p in pendant_3),
        "pendant_3chains_not_common": not any(
            is_common_chain(t, tp, c) for tree in (t, tp) for c in chains_of_length(tree, 3)
            if chain_in(tree, c).pendant),
        "cherries": len(cherries(t)) == k + 1 and len(cherries(tp)) == k + 1,
        "lf_T": fitch_score(t, f) == 1,
        "lf_Tprime": fitch_score(tp, f) >= k + 1,
        "forest": len(forest) == k + 1 and is_agreement_forest(t, tp, forest),
    }
    if run_kernel and all(props.values()):
        from .kernel import kernelize

        props["irreducible"] = not kernelize(t, tp).trace
    return props


def tight_instance(k: int) -> TightInstance:
    """A pair on 9k - 9 taxa at TBR distance exactly k that no rule reduces."""
    if k < 3:
        raise ValueError("tight instances need k >= 3")
    failures = {}
    for levels in _placements(k):
        gen, t, tp, f, forest = _build(k, levels)
        props = tight_properties(k, t, tp, f, forest)
        if all(props.values()):
            return TightInstance(k, t, tp, f, forest, gen, tuple(levels),
                                 fitch_score(t, f), fitch_score(tp, f))
        failures[levels] = sorted(name for name, ok in props.items() if not ok)
    raise TightSearchError(f"no placement works for k={k}; first failures: {list(failures.items())[:3]}")


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def taxon_labels(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("a") + i) for i in range(n)]
    return [f"x{i:03d}" for i in range(1, n + 1)]


def random_tree(labels: Sequence[str], rng: random.Random) -> PhyloTree:
    """Uniform random unrooted binary tree by stepwise insertion on a random edge."""
    labels = list(labels)
    if len(labels) < 3:
        raise ValueError("need at least three taxa")
    adj: dict = {0: [1, 2, 3], 1: [0], 2: [0], 3: [0]}
    leaf_of = {1: labels[0], 2: labels[1], 3: labels[2]}
    edges = [(0, 1), (0, 2), (0, 3)]
    nxt = 4
    for lab in labels[3:]:
        i = rng.randrange(len(edges))
        x, y = edges[i]
        mid, leaf = nxt, nxt + 1
        nxt += 2
        adj[x][adj[x].index(y)] = mid
        adj[y][adj[y].index(x)] = mid
        adj[mid] = [x, y, leaf]
        adj[leaf] = [mid]
        leaf_of[leaf] = lab
        edges[i] = (x, mid)
        edges.extend([(mid, y), (mid, leaf)])
    return build_tree(adj, leaf_of)


def all_trees(labels: Sequence[str]) -> list[PhyloTree]:
    """Every unrooted binary tree on ``labels``, in canonical Newick order."""
    labels = list(labels)
    if len(labels) < 3:
        raise ValueError("need at least three taxa")
    layer = [build_tree({0: [1, 2, 3], 1: [0], 2: [0], 3: [0]},
                        {1: labels[0], 2: labels[1], 3: labels[2]})]
    for lab in labels[3:]:
        nxt = set()
        for tree in layer:
            for e in tree.edges:
                adj, leaf_of = tree_graph(tree)
                mid = fresh_vertex(adj)
                subdivide(adj, e.u, e.v, mid)
                adj[mid + 1] = []
                add_edge(adj, mid, mid + 1)
                leaf_of[mid + 1] = lab
                nxt.add(build_tree(adj, leaf_of))
        layer = list(nxt)
    return sorted(layer, key=write_newick)


def random_tbr_move(tree: PhyloTree, rng: random.Random) -> PhyloTree:
    cut = rng.choice(tree.edges)
    attach = []
    for end in (cut.u, cut.v):
        other = cut.v if end == cut.u else cut.u
        side = _side_vertices(tree, end, other)
        if len(side) == 1:
            attach.append(None)
            continue
        options = [e for e in tree.edges if e.u in side and e.v in side]
        attach.append(rng.choice(options))
    return tbr_move(tree, tuple(cut), attach[0], attach[1])


def _side_vertices(tree: PhyloTree, start: int, blocked: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in tree.neighbors(v):
            if w not in seen and not (v == start and w == blocked):
                seen.add(w)
                stack.append(w)
    return seen


def random_instance(n: int, k_moves: int, seed: int) -> tuple[PhyloTree, PhyloTree]:
    """A random tree and the result of ``k_moves`` random TBR moves on it."""
    if n < 4:
        raise ValueError("need at least four taxa")
    if k_moves < 0:
        raise ValueError("k_moves must be non-negative")
    rng = random.Random(seed)
    t = random_tree(taxon_labels(n), rng)
    t2 = t
    for _ in range(k_moves):
        t2 = random_tbr_move(t2, rng)
    return t, t2


def instance_newick(t1: PhyloTree, t2: PhyloTree) -> str:
    return f"{write_newick(t1)}\n{write_newick(t2)}\n"
