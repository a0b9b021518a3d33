"""Unrooted binary phylogenetic trees: representation, Newick I/O and structural queries.

Trees are immutable. Every constructor renumbers vertices canonically (preorder from
the internal vertex adjacent to the smallest label, children ordered by their smallest
contained label), so two trees on the same taxa are equal exactly when their vertex
structures coincide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

RESERVED_PREFIX = "_z"
_NEWICK_SPECIALS = set("(),;:[]'\"")


class NewickError(ValueError):
    """Malformed or unsupported Newick input."""

    def __init__(self, message: str, position: int | None = None, line: int | None = None):
        self.message = message
        self.position = position
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"column {position + 1}" if line is not None else f"position {position}")
        suffix = f" (at {', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class TreeError(ValueError):
    """Structural violation of the tree invariants."""


# ---------------------------------------------------------------------------
# Taxa
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Taxon:
    id: int
    label: str


class TaxonInterner:
    """Shared label <-> dense id table for a pair of trees."""

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._labels: list[str] = []

    def intern(self, label: str) -> Taxon:
        if not label:
            raise ValueError("taxon labels must be non-empty")
        if label not in self._ids:
            self._ids[label] = len(self._labels)
            self._labels.append(label)
        return Taxon(self._ids[label], label)

    def label(self, taxon_id: int) -> str:
        return self._labels[taxon_id]

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: object) -> bool:
        return label in self._ids


class EdgeRef(NamedTuple):
    """Undirected edge of a specific tree, stored with u < v."""

    u: int
    v: int

    @classmethod
    def of(cls, a: int, b: int) -> "EdgeRef":
        return cls(a, b) if a < b else cls(b, a)


@dataclass(frozen=True)
class Chain:
    """A chain as seen in one host tree."""

    taxa: tuple[str, ...]
    pendant_left: bool
    pendant_right: bool

    @property
    def pendant(self) -> bool:
        return self.pendant_left or self.pendant_right

    def __len__(self) -> int:
        return len(self.taxa)


# ---------------------------------------------------------------------------
# Tree
# ---------------------------------------------------------------------------


class PhyloTree:
    """Immutable unrooted binary phylogenetic tree.

    Vertex 0 is the canonical root; ``parent[v] < v`` for every other vertex, so
    ascending vertex order is a preorder. Leaves carry labels; internal vertices do not.
    """

    __slots__ = ("_adj", "_labels", "_leaf", "_parent", "__dict__")

    def __init__(self, adj: tuple[tuple[int, ...], ...], labels: tuple[str | None, ...],
                 parent: tuple[int, ...]):
        # Use the classmethod constructors; this one trusts its canonical input.
        self._adj = adj
        self._labels = labels
        self._parent = parent
        self._leaf = {lab: v for v, lab in enumerate(labels) if lab is not None}

    # -- construction -------------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[Hashable, Hashable]],
                   labels: Mapping[Hashable, str]) -> "PhyloTree":
        """Build and validate a tree from arbitrary vertex ids.

        ``labels`` maps leaf vertices to taxon labels. A single labelled vertex with no
        edges is the one-taxon tree.
        """
        adj: dict[Hashable, list[Hashable]] = {v: [] for v in labels}
        for a, b in edges:
            if a == b:
                raise TreeError("self-loop")
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        return cls._canonical(adj, dict(labels))

    @classmethod
    def _canonical(cls, adj: Mapping[Hashable, Sequence[Hashable]],
                   labels: Mapping[Hashable, str]) -> "PhyloTree":
        if not labels:
            raise TreeError("a tree needs at least one taxon")
        seen_labels: set[str] = set()
        for lab in labels.values():
            if lab in seen_labels:
                raise TreeError(f"duplicate label {lab!r}")
            seen_labels.add(lab)
        n_vertices = len(adj)
        n_edges = sum(len(nb) for nb in adj.values())
        if n_edges % 2:
            raise TreeError("asymmetric adjacency")
        n_edges //= 2
        if n_edges != n_vertices - 1:
            raise TreeError("graph is not a tree (edge count)")
        n = len(labels)
        for v, nb in adj.items():
            if len(set(nb)) != len(nb):
                raise TreeError("parallel edges")
            if v in labels:
                if n >= 2 and len(nb) != 1:
                    raise TreeError(f"leaf {labels[v]!r} has degree {len(nb)}")
            elif len(nb) != 3:
                raise TreeError(f"internal vertex of degree {len(nb)}")

        smallest = min(labels, key=lambda v: labels[v])
        if n <= 2:
            root = smallest
        else:
            root = adj[smallest][0]

        # subtree minimum label, relative to the chosen root
        minlab: dict[Hashable, str] = {}
        order: list[Hashable] = []
        par: dict[Hashable, Hashable | None] = {root: None}
        stack = [root]
        while stack:
            v = stack.pop()
            order.append(v)
            for w in adj[v]:
                if w != par[v]:
                    if w in par:
                        raise TreeError("graph contains a cycle")
                    par[w] = v
                    stack.append(w)
        if len(order) != n_vertices:
            raise TreeError("graph is disconnected")
        for v in reversed(order):
            m = labels.get(v)
            for w in adj[v]:
                if w != par[v]:
                    mw = minlab[w]
                    if m is None or mw < m:
                        m = mw
            if m is None:
                raise TreeError("unlabelled leaf")
            minlab[v] = m

        index: dict[Hashable, int] = {}
        new_parent: list[int] = []
        stack = [root]
        while stack:
            v = stack.pop()
            index[v] = len(new_parent)
            new_parent.append(-1 if par[v] is None else index[par[v]])
            kids = sorted((w for w in adj[v] if w != par[v]), key=lambda w: minlab[w])
            stack.extend(reversed(kids))
        new_adj: list[list[int]] = [[] for _ in range(n_vertices)]
        for v, i in index.items():
            new_adj[i] = sorted(index[w] for w in adj[v])
        new_labels = [None] * n_vertices
        for v, lab in labels.items():
            new_labels[index[v]] = lab
        return cls(tuple(tuple(nb) for nb in new_adj), tuple(new_labels), tuple(new_parent))

    # -- basic accessors -----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self._adj)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def label(self, v: int) -> str | None:
        return self._labels[v]

    def is_leaf(self, v: int) -> bool:
        return self._labels[v] is not None

    def leaf(self, taxon: str) -> int:
        try:
            return self._leaf[taxon]
        except KeyError:
            raise KeyError(f"taxon {taxon!r} not in tree") from None

    def parent_of_root_walk(self, v: int) -> int:
        """Parent of ``v`` in the canonical rooting (-1 for the root)."""
        return self._parent[v]

    @cached_property
    def taxa(self) -> frozenset[str]:
        return frozenset(self._leaf)

    @cached_property
    def sorted_taxa(self) -> tuple[str, ...]:
        return tuple(sorted(self._leaf))

    def __len__(self) -> int:
        return len(self._leaf)

    @cached_property
    def edges(self) -> tuple[EdgeRef, ...]:
        """All edges in canonical (lexicographic) order."""
        return tuple(sorted(EdgeRef.of(self._parent[v], v) for v in range(1, self.n_vertices)))

    def has_edge(self, e: tuple[int, int]) -> bool:
        a, b = e
        return 0 <= a < self.n_vertices and b in self._adj[a]

    def parent(self, taxon: str) -> int:
        """The unique neighbour of a leaf (the leaf itself for a one-taxon tree)."""
        v = self.leaf(taxon)
        nb = self._adj[v]
        return nb[0] if nb else v

    def leaves_at(self, v: int) -> tuple[str, ...]:
        """Labels of leaves adjacent to vertex ``v``, sorted."""
        return tuple(sorted(self._labels[w] for w in self._adj[v] if self._labels[w] is not None))

    # -- equality --------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhyloTree):
            return NotImplemented
        return self._labels == other._labels and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self._labels, self._adj))

    def __repr__(self) -> str:
        return f"PhyloTree({write_newick(self)!r})"

    # -- bitmask machinery ----------------------------------------------------

    @cached_property
    def bit(self) -> dict[str, int]:
        """Taxon -> bit index, by sorted label (shared by trees on the same taxa)."""
        return {lab: i for i, lab in enumerate(self.sorted_taxa)}

    def mask(self, taxa: Iterable[str]) -> int:
        bit = self.bit
        m = 0
        for t in taxa:
            try:
                m |= 1 << bit[t]
            except KeyError:
                raise KeyError(f"taxon {t!r} not in tree") from None
        return m

    def taxa_of(self, mask: int) -> frozenset[str]:
        st = self.sorted_taxa
        out = []
        i = 0
        while mask:
            if mask & 1:
                out.append(st[i])
            mask >>= 1
            i += 1
        return frozenset(out)

    @cached_property
    def full_mask(self) -> int:
        return (1 << len(self._leaf)) - 1

    @cached_property
    def below(self) -> tuple[int, ...]:
        """Taxon mask of the subtree hanging below each vertex in the canonical rooting."""
        below = [0] * self.n_vertices
        bit = self.bit
        for v in range(self.n_vertices - 1, -1, -1):
            lab = self._labels[v]
            if lab is not None:
                below[v] |= 1 << bit[lab]
            p = self._parent[v]
            if p >= 0:
                below[p] |= below[v]
        return tuple(below)

    def edge_side(self, e: tuple[int, int]) -> int:
        """Taxon mask of the side of ``e`` away from the canonical root."""
        a, b = e
        child = b if self._parent[b] == a else a
        if self._parent[child] not in (a, b) or child == 0:
            raise TreeError(f"{e} is not an edge")
        return self.below[child]

    @cached_property
    def edge_sides(self) -> tuple[int, ...]:
        """``edge_sides[i]`` is the away-from-root side of ``edges[i]``."""
        return tuple(self.edge_side(e) for e in self.edges)

    @cached_property
    def edge_index(self) -> dict[EdgeRef, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def nontrivial_splits(self) -> frozenset[int]:
        """Internal-edge splits, each normalised to the side without the lowest taxon bit."""
        full = self.full_mask
        out = set()
        for side in self.edge_sides:
            if _popcount(side) >= 2 and _popcount(full ^ side) >= 2:
                out.add(side if not side & 1 else full ^ side)
        return frozenset(out)

    def restricted_splits(self, ymask: int) -> frozenset[int]:
        """Nontrivial splits of T|Y as masks, normalised by the lowest bit of Y."""
        low = ymask & -ymask
        out = set()
        for side in self.edge_sides:
            s = side & ymask
            r = ymask ^ s
            if s and r and (s & (s - 1)) and (r & (r - 1)):
                out.add(r if s & low else s)
        return frozenset(out)

    def used_vertices(self, ymask: int) -> int:
        """Vertex bitmask of the embedding T[Y]."""
        if ymask & (ymask - 1) == 0:
            (t,) = self.taxa_of(ymask)
            return 1 << self._leaf[t]
        out = 0
        below = self.below
        par = self._parent
        for v in range(1, self.n_vertices):
            s = below[v] & ymask
            if s and s != ymask:
                out |= (1 << v) | (1 << par[v])
        return out

    def used_edges(self, ymask: int) -> list[EdgeRef]:
        below = self.below
        par = self._parent
        out = []
        for v in range(1, self.n_vertices):
            s = below[v] & ymask
            if s and s != ymask:
                out.append(EdgeRef.of(par[v], v))
        return sorted(out)


def _popcount(x: int) -> int:
    return bin(x).count("1")


# ---------------------------------------------------------------------------
# Graph helpers shared by restriction, TBR moves and rule applications
# ---------------------------------------------------------------------------


def tree_graph(tree: PhyloTree) -> tuple[dict[int, list[int]], dict[int, str]]:
    """Mutable adjacency copy plus leaf labels, for building derived trees."""
    adj = {v: list(tree.neighbors(v)) for v in range(tree.n_vertices)}
    labels = {v: tree.label(v) for v in range(tree.n_vertices) if tree.is_leaf(v)}
    return adj, labels


def clean_graph(adj: dict, labels: Mapping) -> None:
    """Prune unlabelled leaves and suppress unlabelled degree-2 vertices, in place."""
    changed = True
    while changed:
        changed = False
        for v in list(adj):
            if v not in adj or v in labels:
                continue
            nb = adj[v]
            if len(nb) <= 1:
                for w in nb:
                    adj[w].remove(v)
                del adj[v]
                changed = True
            elif len(nb) == 2:
                a, b = nb
                if a == b or b in adj[a]:
                    raise TreeError("suppression would create a parallel edge")
                adj[a][adj[a].index(v)] = b
                adj[b][adj[b].index(v)] = a
                del adj[v]
                changed = True


def build_tree(adj: dict, labels: Mapping) -> PhyloTree:
    clean_graph(adj, labels)
    return PhyloTree._canonical(adj, {v: labels[v] for v in adj if v in labels})


def add_edge(adj: dict, a, b) -> None:
    adj.setdefault(a, []).append(b)
    adj.setdefault(b, []).append(a)


def remove_edge(adj: dict, a, b) -> None:
    adj[a].remove(b)
    adj[b].remove(a)


def subdivide(adj: dict, a, b, new) -> None:
    """Replace edge {a,b} by the path a-new-b."""
    adj[a][adj[a].index(b)] = new
    adj[b][adj[b].index(a)] = new
    adj[new] = [a, b]


def fresh_vertex(adj: dict) -> int:
    return max((v for v in adj if isinstance(v, int)), default=-1) + 1


# ---------------------------------------------------------------------------
# Newick
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str, pos: int | None = None) -> NewickError:
        return NewickError(msg, self.pos if pos is None else pos)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self):
        node = self.node()
        self.skip_ws()
        if self.peek() == ":":
            raise self.error("branch lengths are not supported")
        if self.peek() != ";":
            raise self.error("expected ';'")
        self.pos += 1
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing characters after ';'")
        return node

    def node(self):
        c = self.peek()
        if c == "(":
            start = self.pos
            self.pos += 1
            kids = [self.node()]
            while True:
                c = self.peek()
                if c == ",":
                    self.pos += 1
                    kids.append(self.node())
                elif c == ")":
                    self.pos += 1
                    break
                else:
                    raise self.error("expected ',' or ')'")
            c = self.peek()
            if c == ":":
                raise self.error("branch lengths are not supported")
            if c and c not in _NEWICK_SPECIALS:
                raise self.error("internal node labels are not supported")
            return (kids, start)
        return self.label()

    def label(self):
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in _NEWICK_SPECIALS or ch.isspace():
                break
            self.pos += 1
        lab = self.text[start:self.pos]
        if not lab:
            ch = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            if ch in "'\"[":
                raise self.error("quoted labels and comments are not supported")
            raise self.error(f"expected a taxon label, found {ch!r}")
        if self.peek() == ":":
            raise self.error("branch lengths are not supported")
        return (lab, start)


def parse_newick(text: str, *, allow_reserved: bool = False) -> PhyloTree:
    """Parse a Newick string into an unrooted binary tree with at least three taxa."""
    root = _Parser(text).parse()
    adj: dict[int, list[int]] = {}
    labels: dict[int, str] = {}
    positions: dict[str, int] = {}
    counter = itertools.count()

    def walk(node) -> int:
        v = next(counter)
        adj[v] = []
        payload, pos = node
        if isinstance(payload, str):
            if payload in positions:
                raise NewickError(f"duplicate label {payload!r}", pos)
            if payload.startswith(RESERVED_PREFIX) and not allow_reserved:
                raise NewickError(f"label {payload!r} uses the reserved prefix {RESERVED_PREFIX!r}", pos)
            positions[payload] = pos
            labels[v] = payload
            return v
        if len(payload) == 1:
            raise NewickError("vertex with a single child (degree 2)", pos)
        for kid in payload:
            w = walk(kid)
            add_edge(adj, v, w)
        if v != 0 and len(payload) != 2:
            raise NewickError(f"non-binary vertex with {len(payload)} children", pos)
        return v

    walk(root)
    if isinstance(root[0], str):
        raise NewickError("a tree needs at least three taxa", 0)
    root_kids = len(adj[0])
    if root_kids == 2:
        a, b = adj[0]
        if a in labels and b in labels:
            raise NewickError("vertex of degree 2 after unrooting; a tree needs at least three taxa", 0)
        del adj[0]
        adj[a][adj[a].index(0)] = b
        adj[b][adj[b].index(0)] = a
    elif root_kids != 3:
        raise NewickError(f"non-binary root with {root_kids} children", root[1])
    return PhyloTree._canonical(adj, labels)


def write_newick(tree: PhyloTree) -> str:
    """Canonical Newick. Trees with fewer than three taxa use internal-only forms."""
    n = len(tree)
    if n == 1:
        return f"{tree.sorted_taxa[0]};"
    if n == 2:
        a, b = tree.sorted_taxa
        return f"({a},{b});"

    def rec(v: int) -> str:
        lab = tree.label(v)
        if lab is not None and v != 0:
            return lab
        kids = [w for w in tree.neighbors(v) if w > v]
        return "(" + ",".join(rec(w) for w in kids) + ")"

    return rec(0) + ";"


def parse_instance(text: str) -> tuple[PhyloTree, PhyloTree]:
    """Two Newick lines (T then T'); blank lines and '#' comments are ignored."""
    trees = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        offset = len(raw) - len(raw.lstrip())
        try:
            trees.append(parse_newick(line))
        except NewickError as exc:
            pos = None if exc.position is None else exc.position + offset
            raise NewickError(exc.message, pos, lineno) from None
    if len(trees) != 2:
        raise NewickError(f"expected exactly two trees, found {len(trees)}")
    t1, t2 = trees
    if t1.taxa != t2.taxa:
        raise NewickError("the two trees have different taxon sets")
    return t1, t2


def format_instance(t1: PhyloTree, t2: PhyloTree) -> str:
    return f"{write_newick(t1)}\n{write_newick(t2)}\n"


def trees_equal(t1: PhyloTree, t2: PhyloTree) -> bool:
    return t1 == t2


# ---------------------------------------------------------------------------
# Restriction and embedding
# ---------------------------------------------------------------------------


def _check_subset(tree: PhyloTree, ys: Iterable[str]) -> frozenset[str]:
    ys = frozenset(ys)
    if not ys:
        raise ValueError("taxon set must be non-empty")
    missing = ys - tree.taxa
    if missing:
        raise ValueError(f"taxa not in tree: {sorted(missing)}")
    return ys


def restrict(tree: PhyloTree, ys: Iterable[str]) -> PhyloTree:
    """T|Y: minimal subtree spanning Y with degree-2 vertices suppressed."""
    ys = _check_subset(tree, ys)
    if ys == tree.taxa:
        return tree
    if len(ys) == 1:
        (t,) = ys
        return PhyloTree.from_edges([], {0: t})
    ymask = tree.mask(ys)
    adj: dict[int, list[int]] = {}
    for e in tree.used_edges(ymask):
        add_edge(adj, e.u, e.v)
    labels = {v: tree.label(v) for v in adj if tree.is_leaf(v)}
    return build_tree(adj, labels)


def embedding(tree: PhyloTree, ys: Iterable[str]) -> set[EdgeRef]:
    """Edge set of T[Y]."""
    ys = _check_subset(tree, ys)
    return set(tree.used_edges(tree.mask(ys)))


def restrictions_equal(t1: PhyloTree, t2: PhyloTree, ys: Iterable[str]) -> bool:
    ys = frozenset(ys)
    m = t1.mask(ys)
    if len(ys) <= 3:
        return True
    return t1.restricted_splits(m) == t2.restricted_splits(t2.mask(ys))


def _require_same_taxa(t1: PhyloTree, t2: PhyloTree) -> None:
    if t1.taxa != t2.taxa:
        raise ValueError("trees are on different taxon sets")


def cherries(tree: PhyloTree) -> list[tuple[str, str]]:
    out = []
    for v in range(tree.n_vertices):
        if not tree.is_leaf(v):
            labs = tree.leaves_at(v)
            if len(labs) == 2:
                out.append(labs)
    return sorted(out)


def is_cherry(tree: PhyloTree, x: str, y: str) -> bool:
    return x != y and len(tree) >= 3 and tree.parent(x) == tree.parent(y)


def relabel(tree: PhyloTree, mapping: Mapping[str, str]) -> PhyloTree:
    adj, labels = tree_graph(tree)
    labels = {v: mapping.get(lab, lab) for v, lab in labels.items()}
    return PhyloTree._canonical(adj, labels)


# ---------------------------------------------------------------------------
# Pendant subtrees
# ---------------------------------------------------------------------------


def pendant_sides(tree: PhyloTree) -> set[int]:
    """Taxon masks of both sides of every internal edge (both sides with >= 2 taxa)."""
    full = tree.full_mask
    out = set()
    for side in tree.edge_sides:
        other = full ^ side
        if side & (side - 1) and other & (other - 1):
            out.add(side)
            out.add(other)
    return out


def find_maximal_common_pendant_subtrees(t1: PhyloTree, t2: PhyloTree) -> list[frozenset[str]]:
    """Maximal common pendant subtrees with at least two leaves, pairwise disjoint.

    Candidates are sides of internal edges. When maximal candidates overlap (only
    possible when their union is the whole taxon set) a disjoint family is kept
    greedily in canonical order.
    """
    _require_same_taxa(t1, t2)
    full = t1.full_mask
    sides2 = pendant_sides(t2)
    common = []
    for s in pendant_sides(t1):
        if s not in sides2:
            continue
        outside = full ^ s
        o = outside & -outside
        if t1.restricted_splits(s | o) == t2.restricted_splits(s | o):
            common.append(s)
    maximal = [s for s in common if not any(s != u and s & u == s for u in common)]
    keyed = sorted(maximal, key=lambda s: tuple(sorted(t1.taxa_of(s))))
    chosen: list[int] = []
    for s in keyed:
        if all(s & c == 0 for c in chosen):
            chosen.append(s)
    return [t1.taxa_of(s) for s in chosen]


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------


def chain_parents(tree: PhyloTree, seq: Sequence[str]) -> list[int] | None:
    try:
        return [tree.parent(x) for x in seq]
    except KeyError:
        return None


def is_chain(tree: PhyloTree, seq: Sequence[str]) -> bool:
    """Parents form a walk whose interior parents are distinct.

    The walk must also be a path once a shared end parent is merged, which excludes
    degenerate walks such as p, q, p.
    """
    n = len(seq)
    if n < 2 or len(set(seq)) != n or len(tree) < 3:
        return False
    ps = chain_parents(tree, seq)
    if ps is None:
        return False
    for i in range(n - 1):
        a, b = ps[i], ps[i + 1]
        if a != b and b not in tree.neighbors(a):
            return False
    inner = ps[1:n - 1]
    if len(set(inner)) != len(inner):
        return False
    if n >= 3:
        if ps[0] in ps[2:]:
            return False
        if ps[-1] in ps[:-2]:
            return False
    return True


def chain_in(tree: PhyloTree, seq: Sequence[str]) -> Chain:
    ps = [tree.parent(x) for x in seq]
    return Chain(tuple(seq), ps[0] == ps[1], ps[-2] == ps[-1])


def is_pendant_chain(tree: PhyloTree, seq: Sequence[str]) -> bool:
    return is_chain(tree, seq) and chain_in(tree, seq).pendant


def _leaf_neighbourhood(tree: PhyloTree) -> dict[str, tuple[str, ...]]:
    out = {}
    for x in tree.sorted_taxa:
        p = tree.parent(x)
        near = set(tree.leaves_at(p))
        for w in tree.neighbors(p):
            if not tree.is_leaf(w):
                near.update(tree.leaves_at(w))
        near.discard(x)
        out[x] = tuple(sorted(near))
    return out


def _grow_chains(trees: Sequence[PhyloTree], max_len: int | None) -> Iterator[tuple[str, ...]]:
    """All oriented sequences of length >= 2 that are chains of every tree given."""
    hoods = [_leaf_neighbourhood(t) for t in trees]
    taxa = trees[0].sorted_taxa

    def candidates(x: str) -> list[str]:
        cs = set(hoods[0][x])
        for h in hoods[1:]:
            cs &= set(h[x])
        return sorted(cs)

    def rec(seq: list[str]):
        if len(seq) >= 2:
            yield tuple(seq)
        if max_len is not None and len(seq) >= max_len:
            return
        for y in candidates(seq[-1]):
            if y in seq:
                continue
            seq.append(y)
            if all(is_chain(t, seq) for t in trees):
                yield from rec(seq)
            seq.pop()

    for x in taxa:
        yield from rec([x])


def chains_of_length(tree: PhyloTree, n: int) -> list[tuple[str, ...]]:
    """All oriented n-chains of a tree, sorted."""
    return sorted(s for s in _grow_chains([tree], n) if len(s) == n)


def common_chains_of_length(t1: PhyloTree, t2: PhyloTree, n: int) -> list[tuple[str, ...]]:
    """All oriented common n-chains, sorted."""
    _require_same_taxa(t1, t2)
    return sorted(s for s in _grow_chains([t1, t2], n) if len(s) == n)


def _orient(seq: tuple[str, ...]) -> tuple[str, ...]:
    return seq if seq[0] <= seq[-1] else tuple(reversed(seq))


def find_maximal_common_chains(t1: PhyloTree, t2: PhyloTree,
                               n_min: int = 2) -> list[tuple[Chain, Chain]]:
    """Maximal common chains of length >= n_min, as (view in T, view in T') pairs.

    Orientation is normalised so the smaller endpoint label comes first.
    """
    if n_min < 2:
        raise ValueError("n_min must be at least 2")
    _require_same_taxa(t1, t2)
    if len(t1) < 3:
        return []
    hood1, hood2 = _leaf_neighbourhood(t1), _leaf_neighbourhood(t2)
    all_common = set(_grow_chains([t1, t2], None))

    def extendable(seq: tuple[str, ...]) -> bool:
        for y in set(hood1[seq[-1]]) & set(hood2[seq[-1]]):
            if y not in seq and seq + (y,) in all_common:
                return True
        for y in set(hood1[seq[0]]) & set(hood2[seq[0]]):
            if y not in seq and (y,) + seq in all_common:
                return True
        return False

    # Swapping the two taxa at a pendant end gives the same structure; keep one reading.
    found: dict[frozenset[str], tuple[str, ...]] = {}
    for s in all_common:
        if len(s) >= n_min and not extendable(s):
            s = _orient(s)
            key = frozenset(s)
            if key not in found or s < found[key]:
                found[key] = s
    return [(chain_in(t1, s), chain_in(t2, s)) for s in sorted(found.values())]


def is_common_chain(t1: PhyloTree, t2: PhyloTree, seq: Sequence[str]) -> bool:
    return is_chain(t1, seq) and is_chain(t2, seq)


def cpt_eligible(t1: PhyloTree, t2: PhyloTree, chain: Sequence[str] | Chain) -> bool:
    """Common chains of length >= 3, or common 2-chains pendant in at least one tree."""
    seq = chain.taxa if isinstance(chain, Chain) else tuple(chain)
    if not is_common_chain(t1, t2, seq):
        raise ValueError(f"{seq} is not a common chain")
    if len(seq) >= 3:
        return True
    return chain_in(t1, seq).pendant or chain_in(t2, seq).pendant


# ---------------------------------------------------------------------------
# TBR moves
# ---------------------------------------------------------------------------

ISOLATED = None


def _component(adj: Mapping, start) -> set:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def tbr_move(tree: PhyloTree, cut: tuple[int, int],
             attach1: tuple[int, int] | None, attach2: tuple[int, int] | None) -> PhyloTree:
    """Delete ``cut``, suppress, then reconnect the two parts.

    ``attach1`` is an edge of the part containing ``cut[0]`` (``ISOLATED`` when that part
    is the single leaf ``cut[0]``); ``attach2`` likewise for ``cut[1]``. Edges are given
    in the original tree's vertex ids; the two edges merged by suppressing an endpoint
    of ``cut`` both name the merged edge.
    """
    u, v = cut
    if not tree.has_edge(cut):
        raise ValueError(f"{cut} is not an edge")
    adj, labels = tree_graph(tree)
    remove_edge(adj, u, v)
    new = fresh_vertex(adj)
    ends = []
    for x, attach in ((u, attach1), (v, attach2)):
        comp = _component(adj, x)
        if x in labels and not adj[x]:
            if attach is not ISOLATED:
                raise ValueError(f"part containing {labels[x]!r} is a single vertex; use ISOLATED")
            ends.append(x)
            continue
        if attach is ISOLATED:
            raise ValueError("ISOLATED is only valid for a single-vertex part")
        a, b = attach
        if a not in comp or b not in comp or not tree.has_edge(attach) or {a, b} == {u, v}:
            raise ValueError(f"attachment edge {attach} is not in the part containing vertex {x}")
        if x not in labels:
            p, q = adj[x]
            # suppress x; edges {p,x} and {x,q} become {p,q}
            adj[p][adj[p].index(x)] = q
            adj[q][adj[q].index(x)] = p
            del adj[x]
            if x in (a, b):
                a, b = (p, q)
        subdivide(adj, a, b, new)
        ends.append(new)
        new += 1
    add_edge(adj, ends[0], ends[1])
    return build_tree(adj, labels)


def tbr_neighbors(tree: PhyloTree) -> set[PhyloTree]:
    """All trees one TBR move away (excluding the tree itself)."""
    out: set[PhyloTree] = set()
    for e in tree.edges:
        adj, _ = tree_graph(tree)
        remove_edge(adj, e.u, e.v)
        options = []
        for x in (e.u, e.v):
            if tree.is_leaf(x) and len(tree) >= 2:
                comp = {x}
            else:
                comp = _component(adj, x)
            if len(comp) == 1:
                options.append([ISOLATED])
            else:
                opts = [f for f in tree.edges if f.u in comp and f.v in comp]
                options.append(opts)
        for a1 in options[0]:
            for a2 in options[1]:
                out.add(tbr_move(tree, (e.u, e.v), a1, a2))
    out.discard(tree)
    return out


def is_common_pendant_subtree(t1: PhyloTree, t2: PhyloTree, taxa: Iterable[str]) -> bool:
    """``taxa`` hangs off a single edge in both trees with the same rooted shape."""
    m = t1.mask(taxa)
    if m & (m - 1) == 0:
        return False
    if m not in pendant_sides(t1) or m not in pendant_sides(t2):
        return False
    outside = t1.full_mask ^ m
    o = outside & -outside
    return t1.restricted_splits(m | o) == t2.restricted_splits(m | o)


def vertex_path(tree: PhyloTree, u: int, v: int) -> list[int]:
    """Vertices of the unique u-v path, inclusive."""
    up_u = [u]
    while up_u[-1] != 0:
        up_u.append(tree.parent_of_root_walk(up_u[-1]))
    index = {x: i for i, x in enumerate(up_u)}
    up_v = [v]
    while up_v[-1] not in index:
        up_v.append(tree.parent_of_root_walk(up_v[-1]))
    meet = up_v[-1]
    return up_u[:index[meet] + 1] + list(reversed(up_v[:-1]))


def branch_mask(tree: PhyloTree, u: int, w: int) -> int:
    """Taxon mask of the component containing ``w`` after deleting edge {u, w}."""
    if tree.parent_of_root_walk(w) == u:
        return tree.below[w]
    if tree.parent_of_root_walk(u) == w:
        return tree.full_mask ^ tree.below[u]
    raise TreeError(f"({u}, {w}) is not an edge")


def third_neighbor(tree: PhyloTree, v: int, *exclude: int) -> int:
    rest = [w for w in tree.neighbors(v) if w not in exclude]
    if len(rest) != 1:
        raise TreeError(f"vertex {v} has {len(rest)} remaining neighbours")
    return rest[0]
