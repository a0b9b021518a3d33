"""Reductions 8, 9 and 10, Operation P, and the conservative eligibility tests.

The eligibility tests return YES only when a concrete tree pattern certifies that some
maximum agreement forest has the required shape; otherwise they answer NO_DONT_KNOW.
Each pattern is checked against exhaustive forest enumeration in the test suite.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .maf import AgreementForest, enumerate_mafs
from .phylo import (
    RESERVED_PREFIX,
    EdgeRef,
    PhyloTree,
    add_edge,
    branch_mask,
    build_tree,
    chain_in,
    chains_of_length,
    cherries,
    common_chains_of_length,
    cpt_eligible,
    fresh_vertex,
    is_chain,
    is_cherry,
    is_common_chain,
    is_common_pendant_subtree,
    remove_edge,
    subdivide,
    third_neighbor,
    tree_graph,
    vertex_path,
)
from .reductions_classic import (
    FreshLabels,
    Outcome,
    ReductionError,
    ReductionEvent,
    apply_r1,
    classic_applicable,
    extend_chain,
    remove_taxa,
)

DEFAULT_EXACT_CAP = 10
# Reserved prefix, so it cannot collide with an input taxon.
PROBE_LABEL = RESERVED_PREFIX + "probe"


class Verdict(enum.Enum):
    YES = "YES"
    NO_DONT_KNOW = "NO/DON'T KNOW"


@dataclass(frozen=True)
class Eligibility:
    verdict: Verdict
    matched_pattern: str | None = None
    witness_taxa: tuple[str, ...] = ()

    def __post_init__(self):
        if self.verdict is Verdict.YES and self.matched_pattern is None:
            raise ValueError("a YES verdict needs a matched pattern")

    def __bool__(self) -> bool:
        return self.verdict is Verdict.YES


NO = Eligibility(Verdict.NO_DONT_KNOW)


@dataclass(frozen=True)
class EligibilityMode:
    """Exact mode answers by forest enumeration on instances with at most ``cap`` taxa."""

    exact: bool = False
    cap: int = DEFAULT_EXACT_CAP

    def use_exact(self, tree: PhyloTree) -> bool:
        return self.exact and len(tree) <= self.cap


CATALOG = EligibilityMode()


@dataclass(frozen=True)
class InterruptedChain:
    chain: tuple[str, str, str, str]
    interrupter: EdgeRef


def _bits(mask: int) -> Iterator[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


# ---------------------------------------------------------------------------
# Interrupted 4-chains
# ---------------------------------------------------------------------------


def find_interrupted_4chains(t1: PhyloTree, t2: PhyloTree) -> list[InterruptedChain]:
    """4-chains of ``t1`` whose parents in ``t2`` form a walk broken by one extra vertex.

    Orientation is normalised (smaller endpoint first). Degenerate walks in which the
    interrupting vertex is itself the parent of an end taxon are not reported.
    """
    out = []
    seen = set()
    for seq in chains_of_length(t1, 4):
        if seq[0] > seq[-1] or seq in seen:
            continue
        seen.add(seq)
        pa, pb, pc, pd = (t2.parent(x) for x in seq)
        if not (pa == pb or pa in t2.neighbors(pb)):
            continue
        if not (pc == pd or pc in t2.neighbors(pd)):
            continue
        if pb == pc or pc in t2.neighbors(pb):
            continue
        common = set(t2.neighbors(pb)) & set(t2.neighbors(pc))
        if len(common) != 1:
            continue
        (v,) = common
        if v in (pa, pd):
            continue
        u = third_neighbor(t2, v, pb, pc)
        out.append(InterruptedChain(seq, EdgeRef.of(u, v)))
    return out


# ---------------------------------------------------------------------------
# Reduction 8A / 8
# ---------------------------------------------------------------------------


def _structure_c(t1: PhyloTree, t2: PhyloTree, a: str, c: Sequence[str]) -> str | None:
    """Why (a; b,c,d) fails the primary-chain conditions, or None if it satisfies them."""
    b, cc, d = c
    if len({a, b, cc, d}) != 4:
        return "taxa must be distinct"
    if not is_common_chain(t1, t2, c):
        return "C is not a common chain"
    if not is_cherry(t2, b, cc) or not chain_in(t2, c).pendant_left:
        return "C must be pendant in T' with cherry {b,c}"
    if chain_in(t1, c).pendant:
        return "C must not be pendant in T"
    if not is_chain(t1, (a, b, cc, d)):
        return "(a,b,c,d) must be a chain of T"
    if is_chain(t2, (a, b, cc, d)):
        return "(a,b,c,d) must not be a chain of T'"
    if t1.parent(a) == t1.parent(b):
        return "a and b must not form a cherry of T"
    return None


def orient_secondary(t1: PhyloTree, t2: PhyloTree, d: Sequence[str]) -> tuple[str, ...] | None:
    """Orientation (e,f,g) of a common 3-chain with {f,g} a cherry in neither tree."""
    for seq in (tuple(d), tuple(reversed(d))):
        if not is_cherry(t1, seq[1], seq[2]) and not is_cherry(t2, seq[1], seq[2]):
            return seq
    return None


def check_8a(t1: PhyloTree, t2: PhyloTree, c: Sequence[str], a: str, d: Sequence[str]) -> str | None:
    """Reason the 8A preconditions fail (excluding the reducedness requirement), or None."""
    why = _structure_c(t1, t2, a, c)
    if why:
        return why
    if len(d) != 3 or not is_common_chain(t1, t2, d):
        return "D is not a common 3-chain"
    if set(d) & (set(c) | {a}):
        return "D must be disjoint from C and a"
    if orient_secondary(t1, t2, d) is None:
        return "D has no orientation avoiding cherries at its far end"
    return None


def _suppress(adj: dict, x) -> None:
    p, q = adj[x]
    adj[p][adj[p].index(x)] = q
    adj[q][adj[q].index(x)] = p
    del adj[x]


def _component(adj: dict, start) -> set:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def apply_8a(t1: PhyloTree, t2: PhyloTree, c: Sequence[str], a: str, d: Sequence[str],
             new_label: str) -> tuple[PhyloTree, PhyloTree] | None:
    """The 8A rewiring; ``d`` must already be oriented. None if the rewiring is impossible."""
    b, cc, dd = c
    e, f, g = d
    s1, s2 = extend_chain(t1, t2, d, [new_label], "right")
    adj, labels = tree_graph(s1)
    pa, pb = s1.parent(a), s1.parent(b)
    if pb not in adj[pa]:
        return None
    remove_edge(adj, pa, pb)
    _suppress(adj, pa)
    _suppress(adj, pb)
    leaf = {lab: v for v, lab in labels.items()}
    (pf,) = adj[leaf[f]]
    (pg,) = adj[leaf[g]]
    if pf == pg or pg not in adj[pf]:
        return None
    v = fresh_vertex(adj)
    subdivide(adj, pf, pg, v)
    e_side = _component(adj, leaf[e])
    other = sorted({tuple(sorted((x, y))) for x in adj if x not in e_side for y in adj[x]})
    u = v + 1
    for x, y in other:
        trial = {k: list(nb) for k, nb in adj.items()}
        subdivide(trial, x, y, u)
        add_edge(trial, u, v)
        r1 = build_tree(trial, labels)
        if is_chain(r1, (b, cc, dd)) and chain_in(r1, (b, cc, dd)).pendant \
                and is_common_pendant_subtree(r1, s2, (b, cc, dd)):
            return r1, s2
    return None


def reduce8a(t1: PhyloTree, t2: PhyloTree, c: Sequence[str], a: str, d: Sequence[str],
             fresh: FreshLabels | None = None, *, assume_reduced: bool = False
             ) -> tuple[PhyloTree, PhyloTree] | None:
    """Rewire T so that (b,c,d) becomes a common pendant subtree, adding one taxon."""
    if not assume_reduced and classic_applicable(t1, t2):
        raise ValueError("Reductions 1-7 must be exhausted before Reduction 8A")
    why = check_8a(t1, t2, c, a, d)
    if why:
        raise ValueError(f"Reduction 8A precondition violated: {why}")
    fresh = fresh if fresh is not None else FreshLabels.after(t1, t2)
    return apply_8a(t1, t2, tuple(c), a, orient_secondary(t1, t2, d), fresh.next())


def apply_r8(t1: PhyloTree, t2: PhyloTree, c: Sequence[str], a: str, d: Sequence[str],
             labels: Sequence[str]) -> tuple[PhyloTree, PhyloTree] | None:
    """8A followed by Reduction 1 on {b,c,d}; ``labels`` are the two fresh labels used."""
    got = apply_8a(t1, t2, c, a, d, labels[0])
    if got is None:
        return None
    r1, r2 = got
    if not is_common_pendant_subtree(r1, r2, c):
        raise ReductionError("8A did not create a common pendant subtree")
    return apply_r1(r1, r2, c, labels[1])


def _primary_structures(t1: PhyloTree, t2: PhyloTree) -> Iterator[tuple[str, tuple[str, ...]]]:
    """(a, (b,c,d)) pairs satisfying the primary-chain conditions, in canonical order."""
    for c in common_chains_of_length(t1, t2, 3):
        if not is_cherry(t2, c[0], c[1]) or chain_in(t1, c).pendant:
            continue
        pb = t1.parent(c[0])
        cands = set()
        for w in t1.neighbors(pb):
            if not t1.is_leaf(w):
                cands.update(t1.leaves_at(w))
        for a in sorted(cands - set(c)):
            if _structure_c(t1, t2, a, c) is None:
                yield a, c


def _secondaries(t1: PhyloTree, t2: PhyloTree, avoid: set[str]) -> Iterator[tuple[str, ...]]:
    seen = set()
    for d in common_chains_of_length(t1, t2, 3):
        if set(d) & avoid:
            continue
        od = orient_secondary(t1, t2, d)
        if od is None or od in seen:
            continue
        seen.add(od)
        yield od


def detect_r8(t1: PhyloTree, t2: PhyloTree) -> tuple[str, tuple[str, ...], tuple[str, ...]] | None:
    """First (a, C, D) for which the 8A rewiring succeeds."""
    for a, c in _primary_structures(t1, t2):
        for d in _secondaries(t1, t2, set(c) | {a}):
            if apply_8a(t1, t2, c, a, d, PROBE_LABEL) is not None:
                return a, c, d
    return None


def reduce8(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None, *,
            assume_reduced: bool = False) -> Outcome | None:
    if not assume_reduced and classic_applicable(t1, t2):
        return None
    found = detect_r8(t1, t2)
    if found is None:
        return None
    a, c, d = found
    fresh = fresh if fresh is not None else FreshLabels.after(t1, t2)
    labels = (fresh.next(), fresh.next())
    r1, r2 = apply_r8(t1, t2, c, a, d, labels)
    event = ReductionEvent(
        "R8", (a,) + c + d, 0, 1,
        f"1|3 structure a={a} C=({','.join(c)}) reduced using D=({','.join(d)})", fresh=labels)
    return r1, r2, event


# ---------------------------------------------------------------------------
# Eligibility: shared helpers
# ---------------------------------------------------------------------------


def _hanging(tree: PhyloTree, new_taxa: Iterable[str], old_vertices: int) -> int:
    """Edges leaving the part of T[new] not already occupied by ``old_vertices``."""
    new_mask = tree.mask(new_taxa)
    used = tree.used_vertices(new_mask)
    fresh_part = used & ~old_vertices
    count = 0
    for w in _bits(fresh_part):
        if tree.is_leaf(w):
            continue
        for x in tree.neighbors(w):
            if not used >> x & 1:
                count += 1
    return count


def _internal_new(tree: PhyloTree, new_taxa: Iterable[str]) -> int:
    used = tree.used_vertices(tree.mask(new_taxa))
    return sum(1 << w for w in _bits(used) if not tree.is_leaf(w))


def _attached(tree: PhyloTree, vertices: Sequence[int], exclude: set[str]) -> dict[str, int]:
    """Taxa hanging directly off the given vertices, with the vertex's position."""
    out = {}
    for i, v in enumerate(vertices):
        for lab in tree.leaves_at(v):
            if lab not in exclude:
                out[lab] = i
    return out


def _cpt_chains(t1: PhyloTree, t2: PhyloTree) -> list[tuple[str, ...]]:
    chains = list(common_chains_of_length(t1, t2, 3))
    for pair in common_chains_of_length(t1, t2, 2):
        if cpt_eligible(t1, t2, pair):
            chains.append(pair)
    return chains


def _step1(t1: PhyloTree, t2: PhyloTree, path_tree: PhyloTree, interior: set[int],
           tup: Sequence[str]) -> tuple[str, ...] | None:
    for z in _cpt_chains(t1, t2):
        if set(z) & set(tup):
            continue
        if any(path_tree.parent(x) in interior for x in z):
            return z
    return None


def _yes(pattern: str, *taxa: str) -> Eligibility:
    return Eligibility(Verdict.YES, pattern, tuple(taxa))


# ---------------------------------------------------------------------------
# Algorithm 1: Operation P eligibility
# ---------------------------------------------------------------------------


def p_structure(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str]) -> str | None:
    """Why ``tup`` fails the Operation P shape, or None."""
    if len(tup) != 4 or len(set(tup)) != 4:
        return "need four distinct taxa"
    a, b, c, d = tup
    if not is_cherry(t2, a, b) or not is_cherry(t2, c, d):
        return "T' must have cherries {a,b} and {c,d}"
    if not is_chain(t1, tup) or chain_in(t1, tup).pendant:
        return "T must have the non-pendant chain (a,b,c,d)"
    return None


def algorithm1_eligible(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str]) -> Eligibility:
    """Conservative test for a maximum agreement forest keeping {a,b} and {c,d} apart."""
    why = p_structure(t1, t2, tup)
    if why:
        raise ValueError(f"Algorithm 1 precondition violated: {why}")
    a, b, c, d = tup
    quad = set(tup)
    pa, pb, pc, pd = (t1.parent(x) for x in tup)
    xa = third_neighbor(t1, pa, t1.leaf(a), pb)
    xd = third_neighbor(t1, pd, t1.leaf(d), pc)
    path2 = vertex_path(t2, t2.parent(a), t2.parent(c))
    interior = path2[1:-1]
    on_path = _attached(t2, interior, quad)          # taxon -> index along the interior
    z = _step1(t1, t2, t2, set(interior), tup)
    if z is not None:
        return _yes("step1", *z)

    old1 = t1.used_vertices(t1.mask(tup))
    side_a = branch_mask(t1, pa, xa)
    side_d = branch_mask(t1, pd, xd)
    near_a = [x for x in t1.leaves_at(xa)] if not t1.is_leaf(xa) else []
    near_d = [x for x in t1.leaves_at(xd)] if not t1.is_leaf(xd) else []
    path_taxa = sorted(on_path)

    def in_side(x, side):
        return bool(t1.mask([x]) & side)

    # (a) two path taxa of T' sitting together beyond a in T
    for e, f in itertools.combinations(path_taxa, 2):
        if in_side(e, side_a) and in_side(f, side_a) and _hanging(t1, (a, b, e, f), old1) <= 2:
            return _yes("a", e, f)
    # (b) e next to a in T and right after the {a,b} cherry on the T' path
    for e in near_a:
        if on_path.get(e) == 0:
            return _yes("b", e)
    # (c) mirror of (a) at the d end
    for e, f in itertools.combinations(path_taxa, 2):
        if in_side(e, side_d) and in_side(f, side_d) and _hanging(t1, (c, d, e, f), old1) <= 2:
            return _yes("c", e, f)
    # (d) mirror of (b)
    for e in near_d:
        if on_path.get(e) == len(interior) - 1:
            return _yes("d", e)
    # (e) both ends flanked, path order e before f
    for e in near_a:
        for f in near_d:
            if e in on_path and f in on_path and on_path[e] < on_path[f]:
                return _yes("e", e, f)
    # (f)/(g) single flank anywhere on the path
    for e in near_a:
        if e in on_path:
            return _yes("f", e)
    for e in near_d:
        if e in on_path:
            return _yes("g", e)
    return NO


# ---------------------------------------------------------------------------
# Algorithm 2: Reduction 10 eligibility
# ---------------------------------------------------------------------------


def r10_structure(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str]) -> str | None:
    if len(tup) != 4 or len(set(tup)) != 4:
        return "need four distinct taxa"
    a, b, c, d = tup
    if not is_cherry(t1, a, b) or not is_cherry(t1, c, d):
        return "T must have cherries {a,b} and {c,d}"
    if not is_cherry(t2, b, c) or not is_chain(t2, (a, b, c)) or t2.parent(a) == t2.parent(b):
        return "T' must have the pendant 3-chain (a,b,c) with cherry {b,c}"
    return None


def algorithm2_eligible(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str]) -> Eligibility:
    """Conservative test for a maximum agreement forest in which {c} is a singleton."""
    why = r10_structure(t1, t2, tup)
    if why:
        raise ValueError(f"Algorithm 2 precondition violated: {why}")
    a, b, c, d = tup
    quad = set(tup)
    path1 = vertex_path(t1, t1.parent(a), t1.parent(c))
    interior = path1[1:-1]
    on_path = _attached(t1, interior, quad)
    last = len(interior) - 1
    z = _step1(t1, t2, t1, set(interior), tup)
    if z is not None:
        return _yes("step1", *z)

    pa2 = t2.parent(a)
    y2 = third_neighbor(t2, pa2, t2.leaf(a), t2.parent(b))
    side_y = branch_mask(t2, pa2, y2)
    near_y = [x for x in t2.leaves_at(y2)] if not t2.is_leaf(y2) else []
    old2 = t2.used_vertices(t2.mask((a, b, c)))
    path_taxa = sorted(on_path)

    def in_y(x):
        return bool(t2.mask([x]) & side_y)

    def by_pos(i):
        return [x for x, j in on_path.items() if j == i]

    # (a) two taxa right after {a,b} on the T path, grouped beyond a in T'
    for e in by_pos(0):
        for f in by_pos(1):
            if in_y(e) and in_y(f) and _hanging(t2, (a, b, e, f), old2) <= 2:
                return _yes("a", e, f)
    # (b) e right after {a,b} on the T path and next to a in T'
    for e in by_pos(0):
        if e in near_y:
            return _yes("b", e)
    # (c) two taxa right before {c,d} on the T path, grouping with d in T' away from a,b,c
    for f in by_pos(last):
        for e in by_pos(last - 1):
            inner = _internal_new(t2, (d, e, f))
            if not inner & old2 and _hanging(t2, (d, e, f), old2) <= 2:
                return _yes("c", e, f)
    # (d) e right before {c,d} on the T path and a cherry with d in T'
    for e in by_pos(last):
        if is_cherry(t2, d, e):
            return _yes("d", e)
    # (e) as (a), anywhere on the path
    for e, f in itertools.combinations(path_taxa, 2):
        if in_y(e) and in_y(f) and _hanging(t2, (a, b, e, f), old2) <= 2:
            return _yes("e", e, f)
    # (f) as (b), anywhere on the path
    for e in path_taxa:
        if e in near_y:
            return _yes("f", e)
    # (g) d and a path taxon grouped beyond a in T'
    for e in path_taxa:
        if in_y(d) and in_y(e) and _hanging(t2, (a, b, d, e), old2) <= 2:
            return _yes("g", e)
    # (h) a path taxon beyond a in T' whose attachment leaves no room for another block
    for e in path_taxa:
        if in_y(e) and _hanging(t2, (a, b, e), old2) <= 1:
            return _yes("h", e)
    # (i) a path taxon forming a cherry with d in T'
    for e in path_taxa:
        if is_cherry(t2, d, e):
            return _yes("i", e)
    # (j) d hangs next to a in T'
    if d in near_y:
        return _yes("j", d)
    return NO


# ---------------------------------------------------------------------------
# Exact eligibility
# ---------------------------------------------------------------------------


def p_witness(mafs: Iterable[AgreementForest], tup: Sequence[str]) -> AgreementForest | None:
    a, b, c, d = tup
    for f in mafs:
        if f.preserves((a, b)) and f.preserves((c, d)) and not f.preserves(tup):
            return f
    return None


def r10_witness(mafs: Iterable[AgreementForest], tup: Sequence[str]) -> AgreementForest | None:
    c = tup[2]
    for f in mafs:
        if frozenset({c}) in f.blocks:
            return f
    return None


def p_eligible(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str],
               mode: EligibilityMode = CATALOG) -> Eligibility:
    if mode.use_exact(t1):
        if p_structure(t1, t2, tup):
            raise ValueError("Operation P shape violated")
        return _yes("exact", *tup) if p_witness(enumerate_mafs(t1, t2), tup) else NO
    return algorithm1_eligible(t1, t2, tup)


def r10_eligible(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str],
                 mode: EligibilityMode = CATALOG) -> Eligibility:
    if mode.use_exact(t1):
        if r10_structure(t1, t2, tup):
            raise ValueError("Reduction 10 shape violated")
        return _yes("exact", *tup) if r10_witness(enumerate_mafs(t1, t2), tup) else NO
    return algorithm2_eligible(t1, t2, tup)


# ---------------------------------------------------------------------------
# Operation P and Reduction 9
# ---------------------------------------------------------------------------


def p_candidates(t1: PhyloTree, t2: PhyloTree) -> list[tuple[str, str, str, str]]:
    """Tuples with the Operation P shape, in canonical order."""
    out = set()
    for (x1, x2), (y1, y2) in itertools.combinations(cherries(t2), 2):
        for a, b in ((x1, x2), (x2, x1)):
            for c, d in ((y1, y2), (y2, y1)):
                for tup in ((a, b, c, d), (d, c, b, a)):
                    if p_structure(t1, t2, tup) is None:
                        out.add(tup)
    return sorted(out)


def apply_operation_p(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str]) -> tuple[PhyloTree, PhyloTree]:
    """Move b next to c in T'; T is returned unchanged."""
    a, b, c, d = tup
    adj, labels = tree_graph(t2)
    v = fresh_vertex(adj)
    vb = t2.leaf(b)
    pb = t2.parent(b)
    remove_edge(adj, pb, vb)
    del adj[vb]
    _suppress(adj, pb)
    vc = t2.leaf(c)
    (pc,) = adj[vc]
    subdivide(adj, pc, vc, v)
    adj[vb] = []
    add_edge(adj, v, vb)
    s2 = build_tree(adj, labels)
    if not (is_common_chain(t1, s2, (b, c, d)) and is_cherry(s2, b, c)):
        raise ReductionError("Operation P postcondition failed")
    return t1, s2


def operation_p(t1: PhyloTree, t2: PhyloTree, tup: Sequence[str],
                mode: EligibilityMode = CATALOG) -> tuple[PhyloTree, PhyloTree]:
    """Apply Operation P to an eligible tuple (a,b,c,d)."""
    why = p_structure(t1, t2, tup)
    if why:
        raise ValueError(f"tuple is not eligible for Operation P: {why}")
    if not p_eligible(t1, t2, tup, mode):
        raise ValueError("tuple is not eligible for Operation P")
    return apply_operation_p(t1, t2, tup)


def _eligible_p_tuples(t1: PhyloTree, t2: PhyloTree, mode: EligibilityMode
                       ) -> list[tuple[tuple[str, ...], Eligibility]]:
    out = []
    for tup in p_candidates(t1, t2):
        verdict = p_eligible(t1, t2, tup, mode)
        if verdict:
            out.append((tup, verdict))
    return out


def _r91(t1, t2, cand_p, labels) -> tuple | None:
    for a, c in _primary_structures(t1, t2):
        quad = set(c) | {a}
        for tup, verdict in cand_p:
            if set(tup) & quad:
                continue
            s1, s2 = apply_operation_p(t1, t2, tup)
            d = tuple(tup[1:])
            if check_8a(s1, s2, c, a, d) is not None or orient_secondary(s1, s2, d) != d:
                continue
            got = apply_r8(s1, s2, c, a, d, labels)
            if got is not None:
                return got, (a,) + tuple(c) + tuple(tup), verdict
    return None


def _r92(t1, t2, cand_p, mode, labels) -> tuple | None:
    for (tup1, v1), (tup2, _) in itertools.permutations(cand_p, 2):
        if set(tup1) & set(tup2):
            continue
        s1, s2 = apply_operation_p(t1, t2, tup1)
        if p_structure(s1, s2, tup2) is not None:
            continue
        v2 = p_eligible(s1, s2, tup2, mode)
        if not v2:
            continue
        s1, s2 = apply_operation_p(s1, s2, tup2)
        c = tuple(tup1[1:])
        d = tuple(tup2[1:])
        a = tup1[0]
        if check_8a(s1, s2, c, a, d) is not None or orient_secondary(s1, s2, d) != d:
            continue
        got = apply_r8(s1, s2, c, a, d, labels)
        if got is not None:
            return got, tuple(tup1) + tuple(tup2), v1, v2
    return None


def reduce9(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None,
            mode: EligibilityMode = CATALOG) -> Outcome | None:
    """Reduction 9.1, else 9.2. Nothing is committed unless a whole pipeline succeeds."""
    cand_p = _eligible_p_tuples(t1, t2, mode)
    if not cand_p:
        return None
    counter = fresh if fresh is not None else FreshLabels.after(t1, t2)
    labels = counter.peek(2)
    got = _r91(t1, t2, cand_p, labels)
    if got is not None:
        (r1, r2), witness, verdict = got
        counter.next(), counter.next()
        event = ReductionEvent(
            "R9", witness, 0, 1,
            f"9.1: Operation P on ({','.join(witness[4:])}) then Reduction 8 on ({','.join(witness[1:4])})",
            fresh=labels, pattern=verdict.matched_pattern, details=(("variant", "9.1"),))
        return r1, r2, event
    got = _r92(t1, t2, cand_p, mode, labels)
    if got is not None:
        (r1, r2), witness, v1, v2 = got
        counter.next(), counter.next()
        event = ReductionEvent(
            "R9", witness, 0, 1,
            f"9.2: Operation P on ({','.join(witness[:4])}) and ({','.join(witness[4:])}) then Reduction 8",
            fresh=labels, pattern=f"{v1.matched_pattern}+{v2.matched_pattern}",
            details=(("variant", "9.2"),))
        return r1, r2, event
    return None


def replay_r9(t1: PhyloTree, t2: PhyloTree, event: ReductionEvent) -> tuple[PhyloTree, PhyloTree]:
    w = event.witness
    variant = dict(event.details).get("variant")
    if variant == "9.1":
        a, c, tup = w[0], w[1:4], w[4:8]
        s1, s2 = apply_operation_p(t1, t2, tup)
        got = apply_r8(s1, s2, c, a, tuple(tup[1:]), event.fresh)
    else:
        tup1, tup2 = w[:4], w[4:8]
        s1, s2 = apply_operation_p(t1, t2, tup1)
        s1, s2 = apply_operation_p(s1, s2, tup2)
        got = apply_r8(s1, s2, tuple(tup1[1:]), tup1[0], tuple(tup2[1:]), event.fresh)
    if got is None:
        raise ReductionError("recorded Reduction 9 no longer applies")
    return got


# ---------------------------------------------------------------------------
# Reduction 10
# ---------------------------------------------------------------------------


def r10_candidates(t1: PhyloTree, t2: PhyloTree) -> list[tuple[str, str, str, str]]:
    out = set()
    for x, y in cherries(t2):
        for b, c in ((x, y), (y, x)):
            pbc = t2.parent(b)
            for w in t2.neighbors(pbc):
                if t2.is_leaf(w):
                    continue
                for a in t2.leaves_at(w):
                    partner = [z for z in t1.leaves_at(t1.parent(c)) if z != c]
                    for d in partner:
                        tup = (a, b, c, d)
                        if r10_structure(t1, t2, tup) is None:
                            out.add(tup)
    return sorted(out)


def reduce10(t1: PhyloTree, t2: PhyloTree, fresh: FreshLabels | None = None,
             mode: EligibilityMode = CATALOG) -> Outcome | None:
    for tup in r10_candidates(t1, t2):
        verdict = r10_eligible(t1, t2, tup, mode)
        if verdict:
            r1, r2 = remove_taxa(t1, t2, [tup[2]])
            event = ReductionEvent("R10", tup, 1, 1, f"taxon {tup[2]} is a singleton in some MAF",
                                   pattern=verdict.matched_pattern)
            return r1, r2, event
    return None


__all__ = [
    "CATALOG",
    "Eligibility",
    "EligibilityMode",
    "InterruptedChain",
    "Verdict",
    "algorithm1_eligible",
    "algorithm2_eligible",
    "apply_8a",
    "apply_operation_p",
    "apply_r8",
    "check_8a",
    "detect_r8",
    "find_interrupted_4chains",
    "operation_p",
    "orient_secondary",
    "p_candidates",
    "p_eligible",
    "p_structure",
    "p_witness",
    "r10_candidates",
    "r10_eligible",
    "r10_structure",
    "r10_witness",
    "reduce10",
    "reduce8",
    "reduce8a",
    "reduce9",
    "replay_r9",
]
