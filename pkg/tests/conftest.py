from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from tbrkernel.phylo import parse_newick
from tbrkernel.tight import random_instance

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

QUARTET = ("(a,b,(c,d));", "(a,c,(b,d));")
# Seven taxa whose only maximum agreement forest is {a,b,c,d} | {e,f,g}.
UNIQUE_MAF = ("(a,(b,(c,((e,f),g))),d);", "(a,((b,((e,g),f)),c),d);")


@pytest.fixture
def quartet():
    return tuple(parse_newick(s) for s in QUARTET)


@pytest.fixture
def unique_maf_pair():
    return tuple(parse_newick(s) for s in UNIQUE_MAF)


def instances(min_taxa: int = 5, max_taxa: int = 9, max_moves: int = 3):
    """Hypothesis strategy for seeded random instance pairs."""
    return st.builds(
        random_instance,
        st.integers(min_taxa, max_taxa),
        st.integers(0, max_moves),
        st.integers(0, 2**31),
    )
