"""Property suites shared by ``tbrkern verify`` and the acceptance tests.

Each suite returns a :class:`SuiteResult`. Failures carry the offending instance so the
smallest one can be echoed as Newick. Suite output never depends on wall-clock time or
on the thread count.
"""

from __future__ import annotations

import json
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Sequence, TypeVar

from .kernel import (
    KernelInvariantError,
    check_kernel_bound,
    kernel_bound,
    kernel_distance,
    kernelize,
)
from .maf import (
    EXCEEDS,
    enumerate_mafs,
    exact_tbr_distance,
    exact_tbr_via_moves,
    is_agreement_forest,
    maf_avoiding_edge,
    maf_preserving,
)
from .phylo import (
    PhyloTree,
    cpt_eligible,
    find_maximal_common_chains,
    format_instance,
    parse_newick,
)
from .reductions_classic import CLASSIC_REDUCERS, FreshLabels, ReductionError, extend_chain
from .reductions_new import (
    CATALOG,
    algorithm1_eligible,
    algorithm2_eligible,
    apply_operation_p,
    find_interrupted_4chains,
    p_candidates,
    p_eligible,
    p_witness,
    r10_candidates,
    r10_witness,
    reduce8,
    reduce9,
    reduce10,
)
from .tight import all_trees, mp_lower_bound, random_instance, taxon_labels, tight_instance

THREADS_ENV = "TBRKERN_THREADS"
SUITES = ("oracle", "deltas", "cpt", "interrupter", "bound", "eligibility", "tight")
RULE_FIXTURE = "rule_instances.json"
DELTA_RULES = ("R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10", "P")
MIN_PER_RULE = 10

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``map`` over a thread pool; results keep input order regardless of the pool size."""
    items = list(items)
    threads = thread_count() if threads is None else threads
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class Failure:
    t1: PhyloTree
    t2: PhyloTree
    reason: str

    @property
    def size(self) -> int:
        return len(self.t1)


@dataclass
class SuiteResult:
    name: str
    checked: int
    failures: list[Failure] = field(default_factory=list)
    detail: str = ""
    shortfall: str | None = None

    @property
    def passed(self) -> bool:
        return not self.failures and self.shortfall is None

    def minimal_failure(self) -> Failure | None:
        if not self.failures:
            return None
        return min(self.failures, key=lambda f: (f.size, format_instance(f.t1, f.t2)))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        short = f" [{self.shortfall}]" if self.shortfall else ""
        return f"{status} {self.name}: {self.checked} checked, {len(self.failures)} failures{extra}{short}"

    def to_json(self) -> dict:
        out = {"suite": self.name, "passed": self.passed, "checked": self.checked,
               "failures": len(self.failures), "detail": self.detail}
        if self.shortfall:
            out["shortfall"] = self.shortfall
        worst = self.minimal_failure()
        if worst is not None:
            out["counterexample"] = {"newick": format_instance(worst.t1, worst.t2).split(),
                                     "reason": worst.reason}
        return out


def _distance(t1: PhyloTree, t2: PhyloTree, k_max: int) -> int | None:
    cert = exact_tbr_distance(t1, t2, k_max)
    return None if cert == EXCEEDS else cert.k


# ---------------------------------------------------------------------------
# Oracle agreement
# ---------------------------------------------------------------------------


def oracle_suite(sizes: Sequence[int] = (5, 6), k_max: int = 2, **_) -> SuiteResult:
    """Cut enumeration against breadth-first move search on every labelled pair."""
    failures = []
    checked = 0
    for n in sizes:
        trees = all_trees(taxon_labels(n))

        def row(t1: PhyloTree) -> list[Failure]:
            bad = []
            for t2 in trees:
                a = _distance(t1, t2, k_max)
                b = exact_tbr_via_moves(t1, t2, k_max)
                if a != b:
                    bad.append(Failure(t1, t2, f"cut search {a}, move search {b}"))
            return bad

        for bad in ordered_map(row, trees):
            failures.extend(bad)
        checked += len(trees) ** 2
    return SuiteResult("oracle", checked, failures, f"sizes {list(sizes)}, k_max={k_max}")


# ---------------------------------------------------------------------------
# Per-rule distance deltas
# ---------------------------------------------------------------------------


def load_rule_fixture() -> dict[str, list[dict]]:
    text = resources.files("tbrkernel").joinpath("data", RULE_FIXTURE).read_text()
    return json.loads(text)


def fire_rule(rule: str, t1: PhyloTree, t2: PhyloTree, witness: Sequence[str] = ()):
    """Run one rule on a pair. Returns (T, T', delta_k) or None when it does not fire."""
    fresh = FreshLabels.after(t1, t2)
    if rule == "P":
        if not p_eligible(t1, t2, witness):
            return None
        s1, s2 = apply_operation_p(t1, t2, witness)
        return s1, s2, 0
    if rule in CLASSIC_REDUCERS:
        got = CLASSIC_REDUCERS[rule](t1, t2, fresh)
    elif rule == "R8":
        got = reduce8(t1, t2, fresh)
    elif rule == "R9":
        got = reduce9(t1, t2, fresh)
    elif rule == "R10":
        got = reduce10(t1, t2, fresh)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    if got is None:
        return None
    r1, r2, event = got
    if event.rule != rule:
        raise AssertionError(f"{rule} reducer reported {event.rule}")
    return r1, r2, event.delta_k


def check_delta(rule: str, entry: dict, k_max: int = 8) -> tuple[str | None, tuple]:
    """Reason the instance violates d(before) = d(after) + delta_k, or None."""
    t1 = parse_newick(entry["T"], allow_reserved=True)
    t2 = parse_newick(entry["Tprime"], allow_reserved=True)
    if len(t1) > 14:
        return f"instance has {len(t1)} taxa", (t1, t2)
    got = fire_rule(rule, t1, t2, tuple(entry.get("witness", ())))
    if got is None:
        return f"{rule} does not fire", (t1, t2)
    r1, r2, delta = got
    before = _distance(t1, t2, k_max)
    after = _distance(r1, r2, k_max)
    if before is None or after is None:
        return "distance above the oracle cap", (t1, t2)
    if before != after + delta:
        return f"d(before)={before}, d(after)={after}, delta_k={delta}", (t1, t2)
    if "d_before" in entry and (entry["d_before"], entry["d_after"]) != (before, after):
        return "distances differ from the recorded values", (t1, t2)
    return None, (t1, t2)


def deltas_suite(**_) -> SuiteResult:
    fixture = load_rule_fixture()
    jobs = [(rule, e) for rule in DELTA_RULES for e in fixture.get(rule, [])]
    results = ordered_map(lambda job: check_delta(*job), jobs)
    failures = [Failure(pair[0], pair[1], f"{rule}: {why}")
                for (rule, _), (why, pair) in zip(jobs, results) if why]
    counts = {rule: len(fixture.get(rule, [])) for rule in DELTA_RULES}
    short = [r for r, c in counts.items() if c < MIN_PER_RULE]
    detail = " ".join(f"{r}={c}" for r, c in counts.items())
    return SuiteResult("deltas", len(jobs), failures, detail,
                       f"fewer than {MIN_PER_RULE} instances for {short}" if short else None)


# ---------------------------------------------------------------------------
# Chain preservation and interrupted chains
# ---------------------------------------------------------------------------


def greedy_cpt_family(t1: PhyloTree, t2: PhyloTree) -> list[tuple[str, ...]]:
    """Maximal common CPT-eligible chains, added greedily while pairwise disjoint."""
    family: list[tuple[str, ...]] = []
    used: set[str] = set()
    for chain, _ in find_maximal_common_chains(t1, t2, 2):
        if cpt_eligible(t1, t2, chain) and not used & set(chain.taxa):
            family.append(chain.taxa)
            used |= set(chain.taxa)
    return family


def cpt_pairs(seed: int, count: int = 200, max_taxa: int = 9) -> list[tuple[PhyloTree, PhyloTree]]:
    rng = random.Random(seed)
    return [random_instance(rng.randint(5, max_taxa), rng.randint(1, 4), rng.randrange(2**32))
            for _ in range(count)]


def cpt_suite(seed: int = 0, count: int = 200, **_) -> SuiteResult:
    pairs = cpt_pairs(seed, count)

    def one(pair) -> Failure | None:
        t1, t2 = pair
        family = greedy_cpt_family(t1, t2)
        if family and maf_preserving(t1, t2, family) is None:
            return Failure(t1, t2, f"no maximum agreement forest keeps {family}")
        return None

    failures = [f for f in ordered_map(one, pairs) if f]
    chains = sum(len(greedy_cpt_family(*p)) for p in pairs)
    return SuiteResult("cpt", len(pairs), failures, f"{chains} chains")


def interrupted_instances(seed: int, count: int = 50, max_taxa: int = 10
                          ) -> list[tuple[PhyloTree, PhyloTree]]:
    """Random pairs having at least one interrupted 4-chain, found by rejection."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(7, max_taxa)
        t1, t2 = random_instance(n, rng.randint(1, 3), rng.randrange(2**32))
        if find_interrupted_4chains(t1, t2):
            out.append((t1, t2))
    return out


def interrupter_suite(seed: int = 0, count: int = 50, **_) -> SuiteResult:
    pairs = interrupted_instances(seed, count)

    def one(pair) -> list[Failure]:
        t1, t2 = pair
        mafs = enumerate_mafs(t1, t2)
        return [Failure(t1, t2, f"every maximum agreement forest uses {ic.interrupter} ({ic.chain})")
                for ic in find_interrupted_4chains(t1, t2)
                if maf_avoiding_edge(t1, t2, ic.interrupter, mafs) is None]

    failures = [f for bad in ordered_map(one, pairs) for f in bad]
    chains = sum(len(find_interrupted_4chains(*p)) for p in pairs)
    return SuiteResult("interrupter", len(pairs), failures, f"{chains} interrupted chains")


# ---------------------------------------------------------------------------
# Kernel bound
# ---------------------------------------------------------------------------


def chain_stress_instances(extra: int = 9) -> list[tuple[PhyloTree, PhyloTree]]:
    """The k=3 tight pair with each of its common 3-chains lengthened by ``extra`` taxa.

    Without chain reduction these kernels exceed the size bound, which is what the
    fault-injection check relies on.
    """
    inst = tight_instance(3)
    out = []
    for chain, _ in find_maximal_common_chains(inst.T, inst.Tprime, 3):
        labels = [f"y{i:02d}" for i in range(extra)]
        for end in ("right", "left"):
            try:
                out.append(extend_chain(inst.T, inst.Tprime, chain.taxa, labels, end))
                break
            except (ValueError, ReductionError):
                continue
    return out


def bound_suite(seed: int = 0, count: int = 200, k_max: int = 6, skip: Iterable[str] = (),
                **_) -> SuiteResult:
    """Kernel size at most 9k - 8 on instances whose kernel distance k is at least 3."""
    skip = tuple(skip)
    rng = random.Random(seed)

    def one(pair) -> tuple[int | None, Failure | None]:
        t1, t2 = pair
        try:
            res = kernelize(t1, t2, skip=skip)
        except KernelInvariantError as exc:
            return None, Failure(t1, t2, f"kernel invariant: {exc}")
        k = kernel_distance(res, k_max)
        if k is None or k < 3:
            return None, None
        if not check_kernel_bound(res, k):
            return k, Failure(t1, t2, f"kernel has {res.kernel_taxa} taxa > 9k-8 = {kernel_bound(k)} (k={k})")
        return k, None

    failures: list[Failure] = []
    qualifying = 0
    batch = 0
    while qualifying < count and batch < 40:
        pairs = [random_instance(rng.randint(8, 20), rng.randint(3, 4), rng.randrange(2**32))
                 for _ in range(50)]
        for k, fail in ordered_map(one, pairs):
            if fail is not None:
                failures.append(fail)
            if k is not None and qualifying < count:
                qualifying += 1
        batch += 1
    stress = 0
    for k, fail in ordered_map(one, chain_stress_instances()):
        if fail is not None:
            failures.append(fail)
        if k is not None:
            stress += 1
    short = None if qualifying >= count else f"only {qualifying} qualifying random instances"
    return SuiteResult("bound", qualifying + stress, failures,
                       f"{qualifying} random + {stress} long-chain instances with k >= 3", short)


# ---------------------------------------------------------------------------
# Eligibility soundness
# ---------------------------------------------------------------------------


def eligibility_suite(seed: int = 0, min_tuples: int = 500, max_taxa: int = 10, **_) -> SuiteResult:
    """Every catalogue YES must be backed by a maximum agreement forest of the right shape."""
    rng = random.Random(seed)
    failures: list[Failure] = []
    tuples = yes = 0
    while tuples < min_tuples:
        t1, t2 = random_instance(rng.randint(6, max_taxa), rng.randint(1, 4), rng.randrange(2**32))
        p_tups = p_candidates(t1, t2)
        r_tups = r10_candidates(t1, t2)
        if not p_tups and not r_tups:
            continue
        mafs = enumerate_mafs(t1, t2)
        for tup in p_tups:
            tuples += 1
            verdict = algorithm1_eligible(t1, t2, tup)
            if verdict:
                yes += 1
                if p_witness(mafs, tup) is None:
                    failures.append(Failure(t1, t2, f"Operation P {tup}: pattern {verdict.matched_pattern}"))
        for tup in r_tups:
            tuples += 1
            verdict = algorithm2_eligible(t1, t2, tup)
            if verdict:
                yes += 1
                if r10_witness(mafs, tup) is None:
                    failures.append(Failure(t1, t2, f"Reduction 10 {tup}: pattern {verdict.matched_pattern}"))
    return SuiteResult("eligibility", tuples, failures, f"{yes} YES verdicts")


# ---------------------------------------------------------------------------
# Tight family
# ---------------------------------------------------------------------------


def tight_suite(ks: Sequence[int] = range(3, 9), oracle_k: int = 3, **_) -> SuiteResult:
    failures = []
    for k in ks:
        inst = tight_instance(k)
        t, tp = inst.T, inst.Tprime
        problems = []
        if len(t) != 9 * k - 9:
            problems.append(f"{len(t)} taxa")
        if kernelize(t, tp).trace:
            problems.append("a rule fires")
        if mp_lower_bound(t, tp, inst.character) < k:
            problems.append("Fitch bound below k")
        if len(inst.forest) != k + 1 or not is_agreement_forest(t, tp, inst.forest):
            problems.append("forest certificate invalid")
        if k == oracle_k and _distance(t, tp, k) != k:
            problems.append("oracle distance differs from k")
        if problems:
            failures.append(Failure(t, tp, f"k={k}: {', '.join(problems)}"))
    return SuiteResult("tight", len(list(ks)), failures, f"k in {list(ks)}")


SUITE_FUNCTIONS: dict[str, Callable[..., SuiteResult]] = {
    "oracle": oracle_suite,
    "deltas": deltas_suite,
    "cpt": cpt_suite,
    "interrupter": interrupter_suite,
    "bound": bound_suite,
    "eligibility": eligibility_suite,
    "tight": tight_suite,
}


def run_suites(names: Sequence[str], *, seed: int = 0, skip: Iterable[str] = ()) -> list[SuiteResult]:
    unknown = [n for n in names if n not in SUITE_FUNCTIONS]
    if unknown:
        raise ValueError(f"unknown suites: {unknown}")
    return [SUITE_FUNCTIONS[n](seed=seed, skip=tuple(skip)) for n in names]


__all__ = [
    "DELTA_RULES",
    "SUITES",
    "Failure",
    "SuiteResult",
    "bound_suite",
    "check_delta",
    "cpt_suite",
    "deltas_suite",
    "eligibility_suite",
    "fire_rule",
    "greedy_cpt_family",
    "interrupted_instances",
    "interrupter_suite",
    "load_rule_fixture",
    "oracle_suite",
    "ordered_map",
    "run_suites",
    "thread_count",
    "tight_suite",
]
