"""Exact agreement-forest machinery for small instances.

The distance oracle cuts edges of the first tree in ascending subset size. Every
agreement forest with m blocks can be realised by deleting m - 1 edges of T (the block
embeddings are vertex-disjoint), so the first size at which some cut set induces a valid
forest is the maximum-agreement-forest size minus one, i.e. the TBR distance.

Cut sets are pruned with incompatible quartets: a quartet whose topologies differ in the
two trees can never sit inside one block, so every admissible cut set must hit the edge
set of that quartet's embedding in T.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .phylo import (
    Chain,
    EdgeRef,
    PhyloTree,
    cpt_eligible,
    is_common_chain,
    tbr_neighbors,
)

EXCEEDS = "exceeds k_max"


@dataclass(frozen=True)
class AgreementForest:
    """A partition of the taxa, stored canonically (blocks sorted by their sorted labels)."""

    blocks: tuple[frozenset[str], ...]

    @classmethod
    def of(cls, blocks: Iterable[Iterable[str]]) -> "AgreementForest":
        bs = [frozenset(b) for b in blocks]
        return cls(tuple(sorted(bs, key=lambda b: tuple(sorted(b)))))

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self, taxon: str) -> frozenset[str]:
        for b in self.blocks:
            if taxon in b:
                return b
        raise KeyError(taxon)

    def preserves(self, taxa: Iterable[str]) -> bool:
        """True when all the given taxa lie in one block."""
        taxa = frozenset(taxa)
        return any(taxa <= b for b in self.blocks)

    def as_lists(self) -> list[list[str]]:
        return [sorted(b) for b in self.blocks]


@dataclass
class DistanceCertificate:
    k: int
    forest: AgreementForest
    character: dict[str, int] | None = None
    lf_T: int | None = None
    lf_Tprime: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict = {"k": self.k, "blocks": self.forest.as_lists()}
        if self.character is not None:
            out["character"] = {t: self.character[t] for t in sorted(self.character)}
            out["lf_T"] = self.lf_T
            out["lf_Tprime"] = self.lf_Tprime
        out.update(self.extra)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _same_taxa(t1: PhyloTree, t2: PhyloTree) -> None:
    if t1.taxa != t2.taxa:
        raise ValueError("trees are on different taxon sets")


def _block_masks(t1: PhyloTree, partition: Iterable[Iterable[str]]) -> list[int]:
    masks = []
    seen = 0
    for block in partition:
        block = list(block)
        if not block:
            raise ValueError("empty block in partition")
        m = t1.mask(block)
        if m & seen or len(set(block)) != len(block):
            raise ValueError("blocks overlap")
        seen |= m
        masks.append(m)
    if seen != t1.full_mask:
        raise ValueError("blocks do not cover the taxon set")
    return masks


def _restrictions_agree(t1: PhyloTree, t2: PhyloTree, mask: int) -> bool:
    if bin(mask).count("1") <= 3:
        return True
    return t1.restricted_splits(mask) == t2.restricted_splits(mask)


def _vertex_disjoint(tree: PhyloTree, masks: Sequence[int]) -> bool:
    used = 0
    for m in masks:
        vs = tree.used_vertices(m)
        if used & vs:
            return False
        used |= vs
    return True


def _masks_valid(t1: PhyloTree, t2: PhyloTree, masks: Sequence[int], check_first: bool = True) -> bool:
    for m in masks:
        if not _restrictions_agree(t1, t2, m):
            return False
    if check_first and not _vertex_disjoint(t1, masks):
        return False
    return _vertex_disjoint(t2, masks)


def is_agreement_forest(t1: PhyloTree, t2: PhyloTree, partition: Iterable[Iterable[str]]) -> bool:
    """Check both agreement conditions for a partition of the shared taxon set."""
    _same_taxa(t1, t2)
    if isinstance(partition, AgreementForest):
        partition = partition.blocks
    masks = _block_masks(t1, partition)
    return _masks_valid(t1, t2, masks)


# ---------------------------------------------------------------------------
# Cut enumeration
# ---------------------------------------------------------------------------


class _CutSearch:
    """Quartet-pruned enumeration of edge-cut sets of T, shared by the oracle routines."""

    def __init__(self, t1: PhyloTree, t2: PhyloTree):
        _same_taxa(t1, t2)
        self.t1 = t1
        self.t2 = t2
        self.edges = t1.edges
        self.n_edges = len(self.edges)
        # child vertex of each edge in the canonical rooting of T
        par = [t1.parent_of_root_walk(v) for v in range(t1.n_vertices)]
        self.child = [e.v if par[e.v] == e.u else e.u for e in self.edges]
        self.below = [t1.below[c] for c in self.child]
        self.hitting = self._conflict_masks()

    def _leaf_paths(self, tree: PhyloTree) -> dict[str, int]:
        """Edge-index mask of the path from each leaf to the canonical root."""
        idx = tree.edge_index
        up = [0] * tree.n_vertices
        for v in range(1, tree.n_vertices):
            p = tree.parent_of_root_walk(v)
            up[v] = up[p] | (1 << idx[EdgeRef.of(p, v)])
        return {t: up[tree.leaf(t)] for t in tree.sorted_taxa}

    def _conflict_masks(self) -> list[int]:
        t1, t2 = self.t1, self.t2
        taxa = t1.sorted_taxa
        if len(taxa) < 4:
            return []
        up1 = self._leaf_paths(t1)
        up2 = self._leaf_paths(t2)

        def dist(up, x, y):
            return bin(up[x] ^ up[y]).count("1")

        def topology(up, w, x, y, z):
            sums = (dist(up, w, x) + dist(up, y, z), dist(up, w, y) + dist(up, x, z),
                    dist(up, w, z) + dist(up, x, y))
            return sums.index(min(sums))

        masks = set()
        for w, x, y, z in itertools.combinations(taxa, 4):
            if topology(up1, w, x, y, z) != topology(up2, w, x, y, z):
                masks.add((up1[w] ^ up1[x]) | (up1[w] ^ up1[y]) | (up1[w] ^ up1[z]))
        # a cut set hitting a subset also hits every superset
        minimal = []
        for m in sorted(masks, key=lambda m: bin(m).count("1")):
            if not any(s & m == s for s in minimal):
                minimal.append(m)
        return minimal

    @staticmethod
    def _highest(mask: int) -> int:
        return mask.bit_length() - 1

    def cut_sets(self, k: int) -> Iterator[tuple[int, ...]]:
        """Lexicographic k-subsets of edge indices that hit every incompatible quartet."""
        n = self.n_edges
        if k > n:
            return

        def rec(chosen: list[int], start: int, unhit: list[int]):
            left = k - len(chosen)
            if left == 0:
                if not unhit:
                    yield tuple(chosen)
                return
            if unhit:
                limit = min(self._highest(m) for m in unhit)
                if left == 1:
                    common = ~0
                    for m in unhit:
                        common &= m
                    common >>= start
                    i = start
                    while common:
                        if common & 1:
                            chosen.append(i)
                            yield tuple(chosen)
                            chosen.pop()
                        common >>= 1
                        i += 1
                    return
            else:
                limit = n - 1
            limit = min(limit, n - left)
            for i in range(start, limit + 1):
                bit = 1 << i
                chosen.append(i)
                yield from rec(chosen, i + 1, [m for m in unhit if not m & bit])
                chosen.pop()

        yield from rec([], 0, self.hitting)

    def blocks(self, cut: Sequence[int]) -> list[int]:
        """Non-empty taxon masks of the components left after deleting ``cut``."""
        belows = [self.below[i] for i in cut]
        out = []
        covered = 0
        for i, b in enumerate(belows):
            inner = 0
            for j, b2 in enumerate(belows):
                if j != i and b2 & b == b2 and b2 != b:
                    inner |= b2
            block = b & ~inner
            covered |= b
            if block:
                out.append(block)
        root_block = self.t1.full_mask & ~covered
        if root_block:
            out.append(root_block)
        return out

    def valid(self, masks: Sequence[int]) -> bool:
        # blocks of a cut of T are automatically vertex-disjoint in T
        return _masks_valid(self.t1, self.t2, masks, check_first=False)

    def forest(self, masks: Sequence[int]) -> AgreementForest:
        return AgreementForest.of(self.t1.taxa_of(m) for m in masks)

    def first_success(self, k: int) -> AgreementForest | None:
        for cut in self.cut_sets(k):
            masks = self.blocks(cut)
            if self.valid(masks):
                if len(masks) != k + 1:
                    raise AssertionError(
                        f"cut set of size {k} validated with {len(masks)} blocks; a smaller size was missed")
                return self.forest(masks)
        return None

    def all_successes(self, k: int) -> list[AgreementForest]:
        found = set()
        for cut in self.cut_sets(k):
            masks = self.blocks(cut)
            if len(masks) == k + 1 and self.valid(masks):
                found.add(self.forest(masks))
        return sorted(found, key=_forest_key)


def _forest_key(f: AgreementForest):
    return tuple(tuple(sorted(b)) for b in f.blocks)


def exact_tbr_distance(t1: PhyloTree, t2: PhyloTree, k_max: int) -> DistanceCertificate | str:
    """Exact TBR distance with an agreement-forest certificate, or ``EXCEEDS``."""
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    search = _CutSearch(t1, t2)
    for k in range(k_max + 1):
        forest = search.first_success(k)
        if forest is not None:
            if not is_agreement_forest(t1, t2, forest):
                raise AssertionError("oracle produced an invalid agreement forest")
            return DistanceCertificate(k, forest)
    return EXCEEDS


def tbr_distance(t1: PhyloTree, t2: PhyloTree, k_max: int) -> int | None:
    """Convenience wrapper: the distance as an int, or None when above ``k_max``."""
    cert = exact_tbr_distance(t1, t2, k_max)
    return None if cert == EXCEEDS else cert.k


@lru_cache(maxsize=200_000)
def _neighbours(tree: PhyloTree) -> frozenset[PhyloTree]:
    return frozenset(tbr_neighbors(tree))


def exact_tbr_via_moves(t1: PhyloTree, t2: PhyloTree, k_max: int) -> int | str:
    """Breadth-first search over TBR neighbourhoods; independent of agreement forests."""
    _same_taxa(t1, t2)
    if t1 == t2:
        return 0
    seen = {t1}
    frontier = [t1]
    for depth in range(1, k_max + 1):
        nxt = []
        for tree in frontier:
            for nb in _neighbours(tree):
                if nb == t2:
                    return depth
                if nb not in seen:
                    seen.add(nb)
                    nxt.append(nb)
        frontier = nxt
    return EXCEEDS


def maf_size(t1: PhyloTree, t2: PhyloTree, k_max: int | None = None) -> int:
    limit = len(t1) if k_max is None else k_max
    cert = exact_tbr_distance(t1, t2, limit)
    if cert == EXCEEDS:
        raise ValueError("distance exceeds the given bound")
    return cert.k + 1


def enumerate_mafs(t1: PhyloTree, t2: PhyloTree) -> list[AgreementForest]:
    """All maximum agreement forests, in canonical order."""
    search = _CutSearch(t1, t2)
    for k in range(search.n_edges + 1):
        found = search.all_successes(k)
        if found:
            return found
    raise AssertionError("no agreement forest found; the all-singletons forest always exists")


def _chain_taxa(c: Sequence[str] | Chain) -> tuple[str, ...]:
    return c.taxa if isinstance(c, Chain) else tuple(c)


def maf_preserving(t1: PhyloTree, t2: PhyloTree, chains: Iterable[Sequence[str] | Chain],
                   mafs: Sequence[AgreementForest] | None = None) -> AgreementForest | None:
    """A maximum agreement forest keeping each chain of the family inside one block."""
    family = [_chain_taxa(c) for c in chains]
    seen: set[str] = set()
    for c in family:
        if seen & set(c):
            raise ValueError("chains in the family overlap")
        seen |= set(c)
        if not is_common_chain(t1, t2, c):
            raise ValueError(f"{c} is not a common chain")
        if not cpt_eligible(t1, t2, c):
            raise ValueError(f"{c} is not CPT-eligible")
    for forest in (enumerate_mafs(t1, t2) if mafs is None else mafs):
        if all(forest.preserves(c) for c in family):
            return forest
    return None


def forest_uses_edge(tree: PhyloTree, forest: AgreementForest, edge: tuple[int, int]) -> bool:
    side = tree.edge_side(edge)
    for b in forest.blocks:
        m = tree.mask(b)
        if m & side and m & ~side:
            return True
    return False


def maf_avoiding_edge(t1: PhyloTree, t2: PhyloTree, edge: tuple[int, int],
                      mafs: Sequence[AgreementForest] | None = None) -> AgreementForest | None:
    """A maximum agreement forest none of whose blocks' embeddings in T' use ``edge``."""
    if not t2.has_edge(edge):
        raise ValueError(f"{edge} is not an edge of the second tree")
    for forest in (enumerate_mafs(t1, t2) if mafs is None else mafs):
        if not forest_uses_edge(t2, forest, edge):
            return forest
    return None
