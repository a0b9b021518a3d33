"""Reductions 1 to 7: detection, application and parameter bookkeeping.

Each rule is split into a detector returning a witness and an applier that rebuilds the
trees from that witness, so recorded events can be replayed on the original pair.
Detectors scan candidates in canonical label order and the first match fires.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .phylo import (
    RESERVED_PREFIX,
    PhyloTree,
    add_edge,
    build_tree,
    chain_in,
    chains_of_length,
    common_chains_of_length,
    find_maximal_common_chains,
    find_maximal_common_pendant_subtrees,
    fresh_vertex,
    is_chain,
    is_cherry,
    is_common_chain,
    relabel,
    restrict,
    subdivide,
    tree_graph,
)

PARAMETER_RULES = frozenset({"R3", "R4", "R5", "R10"})
RULES = ("R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10")

_FRESH_RE = re.compile(re.escape(RESERVED_PREFIX) + r"(\d+)$")


class ReductionError(RuntimeError):
    """A rule application broke one of its own postconditions."""


@dataclass
class FreshLabels:
    """Pair-global counter minting labels with the reserved prefix."""

    counter: int = 0

    @classmethod
    def after(cls, *trees: PhyloTree) -> "FreshLabels":
        """Start past every fresh label already present in the trees."""
        top = -1
        for t in trees:
            for lab in t.taxa:
                m = _FRESH_RE.match(lab)
                if m:
                    top = max(top, int(m.group(1)))
        return cls(top + 1)

    def peek(self, count: int) -> tuple[str, ...]:
        """The next ``count`` labels, without consuming them."""
        return tuple(f"{RESERVED_PREFIX}{self.counter + i}" for i in range(count))

    def next(self) -> str:
        lab = f"{RESERVED_PREFIX}{self.counter}"
        self.counter += 1
        return lab


@dataclass(frozen=True)
class ReductionEvent:
    rule: str
    witness: tuple[str, ...]
    delta_k: int
    taxa_removed: int
    description: str
    fresh: tuple[str, ...] = ()
    pattern: str | None = None
    details: tuple[tuple[str, object], ...] = field(default=())

    def __post_init__(self):
        expected = 1 if self.rule in PARAMETER_RULES else 0
        if self.delta_k != expected:
            raise ValueError(f"{self.rule} must have delta_k={expected}")

    def to_json(self) -> dict:
        out: dict = {
            "rule": self.rule,
            "witness": list(self.witness),
            "delta_k": self.delta_k,
            "taxa_removed": self.taxa_removed,
            "description": self.description,
        }
        if self.fresh:
            out["fresh"] = list(self.fresh)
        if self.pattern is not None:
            out["pattern"] = self.pattern
        for key, value in self.details:
            out[key] = value
        return out


Outcome = tuple[PhyloTree, PhyloTree, ReductionEvent]


def _fresh(fresh: FreshLabels | None, *trees: PhyloTree) -> FreshLabels:
    return fresh if fresh is not None else FreshLabels.after(*trees)


def remove_taxa(t1: PhyloTree, t2: PhyloTree, taxa) -> tuple[PhyloTree, PhyloTree]:
    keep = t1.taxa - frozenset(taxa)
    return restrict(t1, keep), restrict(t2, keep)


# ---------------------------------------------------------------------------
# Reduction 1
# ---------------------------------------------------------------------------


def detect_r1(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    subtrees = find_maximal_common_pendant_subtrees(t1, t2)
    return tuple(sorted(subtrees[0])) if subtrees else None


def apply_r1(t1: PhyloTree, t2: PhyloTree, subtree: Sequence[str], label: str) -> tuple[PhyloTree, PhyloTree]:
    """Replace a common pendant subtree by a single leaf carrying ``label``."""
    if label in t1.taxa:
        raise ValueError(f"label {label!r} already in use")
    keeper = min(subtree)
    keep = (t1.taxa - frozenset(subtree)) | {keeper}
    r1 = relabel(restrict(t1, keep), {keeper: label})
    r2 = relabel(restrict(t2, keep), {keeper: label})
    return r1, r2


def reduce1_subtree(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    subtree = detect_r1(t1, t2)
    if subtree is None:
        return None
    label = _fresh(fresh, t1, t2).next()
    r1, r2 = apply_r1(t1, t2, subtree, label)
    event = ReductionEvent("R1", subtree, 0, len(subtree) - 1,
                           f"common pendant subtree {{{','.join(subtree)}}} -> {label}", fresh=(label,))
    return r1, r2, event


# ---------------------------------------------------------------------------
# Reduction 2
# ---------------------------------------------------------------------------


def detect_r2(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    for c1, _ in find_maximal_common_chains(t1, t2, 4):
        return c1.taxa
    return None


def reduce2_chain(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    chain = detect_r2(t1, t2)
    if chain is None:
        return None
    dropped = chain[3:]
    r1, r2 = remove_taxa(t1, t2, dropped)
    event = ReductionEvent("R2", chain, 0, len(dropped),
                           f"common {len(chain)}-chain truncated to ({','.join(chain[:3])})")
    return r1, r2, event


# ---------------------------------------------------------------------------
# Reductions 3-5
# ---------------------------------------------------------------------------


def _common_3_chains(t1: PhyloTree, t2: PhyloTree) -> list[tuple[str, ...]]:
    return common_chains_of_length(t1, t2, 3)


def detect_r3(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    for c in _common_3_chains(t1, t2):
        if is_cherry(t1, c[0], c[1]) and is_cherry(t2, c[1], c[2]):
            return c
    return None


def reduce3(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    c = detect_r3(t1, t2)
    if c is None:
        return None
    r1, r2 = remove_taxa(t1, t2, c)
    return r1, r2, ReductionEvent("R3", c, 1, 3, f"common 3-chain ({','.join(c)}) removed")


def _cherry_partner(tree: PhyloTree, x: str) -> str | None:
    if len(tree) < 3:
        return None
    others = [y for y in tree.leaves_at(tree.parent(x)) if y != x]
    return others[0] if others else None


def detect_r4(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    """Witness (l1, l2, l3, x)."""
    for c in _common_3_chains(t1, t2):
        if is_cherry(t1, c[1], c[2]):
            x = _cherry_partner(t2, c[2])
            if x is not None and x not in c:
                return c + (x,)
    return None


def reduce4(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    w = detect_r4(t1, t2)
    if w is None:
        return None
    r1, r2 = remove_taxa(t1, t2, [w[3]])
    return r1, r2, ReductionEvent("R4", w, 1, 1, f"taxon {w[3]} removed beside chain ({','.join(w[:3])})")


def detect_r5(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    """Witness (l1, l2, l3, l4, x)."""
    for x in t1.sorted_taxa:
        l2 = _cherry_partner(t1, x)
        l4 = _cherry_partner(t2, x)
        if l2 is None or l4 is None:
            continue
        l3 = _cherry_partner(t1, l4)
        l1 = _cherry_partner(t2, l2)
        if l1 is None or l3 is None:
            continue
        w = (l1, l2, l3, l4, x)
        if len(set(w)) != 5:
            continue
        if is_common_chain(t1, t2, (l1, l2)) and is_common_chain(t1, t2, (l3, l4)):
            return w
    return None


def reduce5(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    w = detect_r5(t1, t2)
    if w is None:
        return None
    r1, r2 = remove_taxa(t1, t2, [w[4]])
    return r1, r2, ReductionEvent("R5", w, 1, 1, f"taxon {w[4]} removed between 2-chains")


# ---------------------------------------------------------------------------
# Reductions 6-7
# ---------------------------------------------------------------------------


def detect_r6(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    for s in chains_of_length(t2, 6):
        if (is_cherry(t1, s[1], s[2]) and is_cherry(t1, s[3], s[4])
                and is_common_chain(t1, t2, s[:3]) and is_common_chain(t1, t2, s[3:])):
            return s
    return None


def reduce6(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    s = detect_r6(t1, t2)
    if s is None:
        return None
    r1, r2 = remove_taxa(t1, t2, s[3:5])
    return r1, r2, ReductionEvent("R6", s, 0, 2, f"taxa {s[3]},{s[4]} removed from 6-chain of T'")


def detect_r7(t1: PhyloTree, t2: PhyloTree) -> tuple[str, ...] | None:
    for s in chains_of_length(t2, 5):
        if (is_cherry(t1, s[1], s[2]) and is_cherry(t1, s[3], s[4])
                and is_common_chain(t1, t2, s[:3]) and is_common_chain(t1, t2, s[3:])):
            return s
    return None


def reduce7(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None) -> Outcome | None:
    s = detect_r7(t1, t2)
    if s is None:
        return None
    r1, r2 = remove_taxa(t1, t2, [s[3]])
    return r1, r2, ReductionEvent("R7", s, 0, 1, f"taxon {s[3]} removed from 5-chain of T'")


CLASSIC_REDUCERS = {
    "R1": reduce1_subtree,
    "R2": reduce2_chain,
    "R3": reduce3,
    "R4": reduce4,
    "R5": reduce5,
    "R6": reduce6,
    "R7": reduce7,
}


def classic_applicable(t1: PhyloTree, t2: PhyloTree) -> str | None:
    """Name of the first of Reductions 1-7 that applies, if any."""
    detectors = (detect_r1, detect_r2, detect_r3, detect_r4, detect_r5, detect_r6, detect_r7)
    for name, detect in zip(RULES, detectors):
        if detect(t1, t2) is not None:
            return name
    return None


# ---------------------------------------------------------------------------
# Chain extension (inverse of Reduction 2)
# ---------------------------------------------------------------------------


def _extend_one(tree: PhyloTree, seq: Sequence[str], label: str) -> PhyloTree:
    """Splice ``label`` onto the right end of the chain ``seq`` of ``tree``."""
    adj, labels = tree_graph(tree)
    last = tree.leaf(seq[-1])
    p_last = tree.parent(seq[-1])
    p_prev = tree.parent(seq[-2])
    w = fresh_vertex(adj)
    leaf = w + 1
    if p_prev == p_last:
        subdivide(adj, p_last, last, w)
    else:
        (q,) = [x for x in tree.neighbors(p_last) if x not in (p_prev, last)]
        subdivide(adj, p_last, q, w)
    adj[leaf] = []
    add_edge(adj, w, leaf)
    labels[leaf] = label
    return build_tree(adj, labels)


def extend_chain(t1: PhyloTree, t2: PhyloTree, chain: Sequence[str], new_labels: Sequence[str],
                 end: str = "right") -> tuple[PhyloTree, PhyloTree]:
    """Lengthen a common chain at one end with fresh taxa, in both trees.

    The new taxa are appended in the given order, so extending ``(e,f,g)`` on the
    right by ``[h]`` yields the common chain ``(e,f,g,h)``.
    """
    seq = list(chain)
    if len(seq) < 2:
        raise ValueError("chain must have at least two taxa")
    if not is_common_chain(t1, t2, seq):
        raise ValueError(f"{tuple(seq)} is not a common chain")
    if end not in ("left", "right"):
        raise ValueError("end must be 'left' or 'right'")
    if end == "left":
        seq.reverse()
    for lab in new_labels:
        if lab in t1.taxa or not lab:
            raise ValueError(f"label {lab!r} is not fresh")
        t1 = _extend_one(t1, seq, lab)
        t2 = _extend_one(t2, seq, lab)
        seq.append(lab)
    if not is_common_chain(t1, t2, seq):
        raise ReductionError("extension did not produce a common chain")
    return t1, t2


def pendant_in_both(t1: PhyloTree, t2: PhyloTree) -> list[tuple[str, ...]]:
    """Common 3-chains pendant in both trees (none exist at a fixed point of Reductions 1-7)."""
    out = []
    for c in _common_3_chains(t1, t2):
        if chain_in(t1, c).pendant and chain_in(t2, c).pendant:
            out.append(c)
    return out


__all__ = [
    "CLASSIC_REDUCERS",
    "FreshLabels",
    "Outcome",
    "PARAMETER_RULES",
    "RULES",
    "ReductionError",
    "ReductionEvent",
    "apply_r1",
    "classic_applicable",
    "detect_r1",
    "detect_r2",
    "detect_r3",
    "detect_r4",
    "detect_r5",
    "detect_r6",
    "detect_r7",
    "extend_chain",
    "is_chain",
    "pendant_in_both",
    "reduce1_subtree",
    "reduce2_chain",
    "reduce3",
    "reduce4",
    "reduce5",
    "reduce6",
    "reduce7",
    "remove_taxa",
]
