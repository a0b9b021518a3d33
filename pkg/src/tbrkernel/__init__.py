"""Kernelization engine and verification harness for TBR distance."""

from .kernel import KernelInvariantError, KernelResult, kernel_bound, kernelize, replay_trace
from .maf import (
    EXCEEDS,
    AgreementForest,
    DistanceCertificate,
    enumerate_mafs,
    exact_tbr_distance,
    exact_tbr_via_moves,
    is_agreement_forest,
    maf_avoiding_edge,
    maf_preserving,
)
from .phylo import NewickError, PhyloTree, TreeError, parse_instance, parse_newick, write_newick
from .reductions_classic import FreshLabels, ReductionError, ReductionEvent
from .reductions_new import EligibilityMode, Verdict
from .tight import mp_lower_bound, random_instance, tight_instance

__version__ = "0.1.0"

__all__ = [
    "EXCEEDS",
    "AgreementForest",
    "DistanceCertificate",
    "EligibilityMode",
    "FreshLabels",
    "KernelInvariantError",
    "KernelResult",
    "NewickError",
    "PhyloTree",
    "ReductionError",
    "ReductionEvent",
    "TreeError",
    "Verdict",
    "enumerate_mafs",
    "exact_tbr_distance",
    "exact_tbr_via_moves",
    "is_agreement_forest",
    "kernel_bound",
    "kernelize",
    "maf_avoiding_edge",
    "maf_preserving",
    "mp_lower_bound",
    "parse_instance",
    "parse_newick",
    "random_instance",
    "replay_trace",
    "tight_instance",
    "write_newick",
]
