"""Exhaustive reduction driver and the kernel-size bound check."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .maf import EXCEEDS, exact_tbr_distance
from .phylo import PhyloTree, write_newick
from .reductions_classic import (
    CLASSIC_REDUCERS,
    PARAMETER_RULES,
    RULES,
    FreshLabels,
    Outcome,
    ReductionEvent,
    apply_r1,
    pendant_in_both,
    remove_taxa,
)
from .reductions_new import (
    CATALOG,
    EligibilityMode,
    apply_r8,
    reduce8,
    reduce9,
    reduce10,
    replay_r9,
)

MIN_TAXA = 4


class KernelInvariantError(AssertionError):
    """The driver observed a state that no correct rule application can produce."""


@dataclass
class KernelResult:
    T_r: PhyloTree
    Tprime_r: PhyloTree
    offset: int
    trace: list[ReductionEvent]
    original_taxa: int
    kernel_taxa: int
    original: tuple[PhyloTree, PhyloTree]
    fresh_counter: int = 0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "original": [write_newick(t) for t in self.original],
            "kernel": [write_newick(self.T_r), write_newick(self.Tprime_r)],
            "offset": self.offset,
            "original_taxa": self.original_taxa,
            "kernel_taxa": self.kernel_taxa,
            "fresh_counter": self.fresh_counter,
            "events": [e.to_json() for e in self.trace],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def _reducers(mode: EligibilityMode) -> list[tuple[str, Callable[..., Outcome | None]]]:
    out: list[tuple[str, Callable[..., Outcome | None]]] = list(CLASSIC_REDUCERS.items())
    out.append(("R8", lambda a, b, fr: reduce8(a, b, fr, assume_reduced=True)))
    out.append(("R9", lambda a, b, fr: reduce9(a, b, fr, mode)))
    out.append(("R10", lambda a, b, fr: reduce10(a, b, fr, mode)))
    return out


def _check_state(t1: PhyloTree, t2: PhyloTree, before: int, event: ReductionEvent) -> None:
    if t1.taxa != t2.taxa:
        raise KernelInvariantError(f"{event.rule} left the trees on different taxon sets")
    for t in (t1, t2):
        for v in range(t.n_vertices):
            deg = t.degree(v)
            if len(t) >= 3 and deg not in (1, 3):
                raise KernelInvariantError(f"{event.rule} produced a vertex of degree {deg}")
    if len(t1) >= before:
        raise KernelInvariantError(f"{event.rule} did not decrease the number of taxa")
    if before - len(t1) != event.taxa_removed:
        raise KernelInvariantError(f"{event.rule} removed {before - len(t1)} taxa, recorded {event.taxa_removed}")


def kernelize(t1: PhyloTree, t2: PhyloTree, *, mode: EligibilityMode = CATALOG,
              skip: Iterable[str] = (), fresh: FreshLabels | None = None) -> KernelResult:
    """Apply Reductions 1-10 in order, restarting from Reduction 1 after every firing.

    ``skip`` disables rules by name; it exists for fault-injection tests.
    """
    if t1.taxa != t2.taxa:
        raise ValueError("trees are on different taxon sets")
    skip = frozenset(skip)
    unknown = skip - set(RULES)
    if unknown:
        raise ValueError(f"unknown rules: {sorted(unknown)}")
    fresh = fresh if fresh is not None else FreshLabels.after(t1, t2)
    reducers = [(name, fn) for name, fn in _reducers(mode) if name not in skip]
    original = (t1, t2)
    trace: list[ReductionEvent] = []
    notes: list[str] = []
    if len(t1) < MIN_TAXA:
        notes.append(f"fewer than {MIN_TAXA} taxa: the distance is 0 and no rule is run")
    while len(t1) >= MIN_TAXA:
        for name, fn in reducers:
            got = fn(t1, t2, fresh)
            if got is not None:
                before = len(t1)
                t1, t2, event = got
                _check_state(t1, t2, before, event)
                trace.append(event)
                break
        else:
            break
    if len(t1) >= MIN_TAXA and not skip & set(RULES[:7]):
        both = pendant_in_both(t1, t2)
        if both:
            raise KernelInvariantError(f"common 3-chain {both[0]} is pendant in both trees at a fixed point")
    offset = sum(e.delta_k for e in trace)
    if offset != sum(1 for e in trace if e.rule in PARAMETER_RULES):
        raise KernelInvariantError("offset does not match the parameter-reducing events")
    return KernelResult(t1, t2, offset, trace, len(original[0]), len(t1), original, fresh.counter, notes)


def apply_event(t1: PhyloTree, t2: PhyloTree, event: ReductionEvent) -> tuple[PhyloTree, PhyloTree]:
    """Re-apply a recorded event to the state it was recorded on."""
    w = event.witness
    rule = event.rule
    if rule == "R1":
        return apply_r1(t1, t2, w, event.fresh[0])
    if rule == "R2":
        return remove_taxa(t1, t2, w[3:])
    if rule == "R3":
        return remove_taxa(t1, t2, w)
    if rule == "R4":
        return remove_taxa(t1, t2, [w[3]])
    if rule == "R5":
        return remove_taxa(t1, t2, [w[4]])
    if rule == "R6":
        return remove_taxa(t1, t2, w[3:5])
    if rule == "R7":
        return remove_taxa(t1, t2, [w[3]])
    if rule == "R8":
        got = apply_r8(t1, t2, w[1:4], w[0], w[4:7], event.fresh)
        if got is None:
            raise KernelInvariantError("recorded Reduction 8 no longer applies")
        return got
    if rule == "R9":
        return replay_r9(t1, t2, event)
    if rule == "R10":
        return remove_taxa(t1, t2, [w[2]])
    raise ValueError(f"unknown rule {rule!r}")


def replay_trace(result: KernelResult) -> tuple[PhyloTree, PhyloTree]:
    t1, t2 = result.original
    for event in result.trace:
        t1, t2 = apply_event(t1, t2, event)
    return t1, t2


def kernel_bound(k: int) -> int:
    return 9 * k - 8


def check_kernel_bound(result: KernelResult, k: int) -> bool:
    """Whether the kernel has at most 9k - 8 taxa; vacuously true when k <= 2."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k <= 2:
        note = f"k={k}: the size bound is only claimed for k >= 3; small distances are solved directly"
        if note not in result.notes:
            result.notes.append(note)
        return True
    return result.kernel_taxa <= kernel_bound(k)


def kernel_distance(result: KernelResult, k_max: int) -> int | None:
    """Exact distance of the kernel pair, or None if above ``k_max``."""
    if result.kernel_taxa < MIN_TAXA:
        return 0
    cert = exact_tbr_distance(result.T_r, result.Tprime_r, k_max)
    return None if cert == EXCEEDS else cert.k
