"""Shared fixtures and hypothesis strategies."""

import pytest
from hypothesis import strategies as st

from stablekit.stallings import StallingsGraph
from stablekit.utils import clear_cache
from stablekit.words import FreeWord, parse_word


def words(rank: int = 2, max_size: int = 8):
    """Reduced words of F_rank built from random signed letters."""
    letters = st.sampled_from([i for k in range(1, rank + 1) for i in (k, -k)])
    return st.lists(letters, max_size=max_size).map(lambda xs: FreeWord(rank, xs))


def subgroup(*gens: str, rank: int = 2) -> StallingsGraph:
    return StallingsGraph.from_generators(rank, [parse_word(g, rank) for g in gens])


def w(text: str, rank: int = 2) -> FreeWord:
    return parse_word(text, rank)


@pytest.fixture(autouse=True)
def _fresh_cache():
    clear_cache()
    yield
    clear_cache()


@pytest.fixture
def single_threaded(monkeypatch):
    monkeypatch.setenv("STABLEKIT_THREADS", "1")
