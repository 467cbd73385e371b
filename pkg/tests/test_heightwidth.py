"""Tests for height and width certificates."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import subgroup, w, words
from stablekit.errors import RankMismatchError
from stablekit.heightwidth import (brute_force_oracle, family_height_width, height, intersection_classes,
                                   near_conjugate_packing, width)
from stablekit.stallings import StallingsGraph, random_independent_subgroup


def test_malnormal_cyclic_has_height_and_width_one():
    h, k = height(subgroup("a"), 3), width(subgroup("a"), 3)
    assert (h.n, k.m) == (1, 1)
    assert h.exact and k.exact
    assert h.verify() and k.verify()
    assert h.witness == w("a")


def test_square_of_generator_has_height_two():
    h = height(subgroup("aa"), 3)
    assert h.n == 2
    assert h.verify()
    assert [str(c.rep) for c in h.cosets] == ["", "a"]


def test_width_matches_oracle():
    H = subgroup("aa")
    oracle_h, oracle_w = brute_force_oracle(H, conj_len=3)
    assert width(H, 3).m == oracle_w.m == 2
    assert height(H, 3).n == oracle_h.n


def test_certificate_with_tampered_witness_fails():
    h = height(subgroup("aa"), 3)
    h.witness = w("b")
    assert not h.verify()


def test_family_height_width():
    h, k = family_height_width([subgroup("a"), subgroup("baB")], 3)
    # <baB> is conjugate to <a>, so a lies in a conjugate of each
    assert h.n == 2
    assert h.verify() and k.verify()


def test_family_rank_mismatch():
    with pytest.raises(RankMismatchError):
        family_height_width([subgroup("a"), subgroup("a", rank=3)], 2)


def test_intersection_classes_of_powers():
    classes = intersection_classes([subgroup("aa"), subgroup("aaa")], 3)
    assert subgroup("aaaaaa") in classes


def test_depth_must_be_positive():
    with pytest.raises(ValueError):
        height(subgroup("a"), 0)


def test_near_conjugate_packing_bijection():
    result = near_conjugate_packing(subgroup("a"), w("b"), 3)
    assert result["intersectionRank"] == 0
    assert result["bijective"]
    assert result["cosetsOfH"] == result["cosetsOfK"] == 7


def test_index_two_subgroup_matches_oracle():
    H = subgroup("aa", "b", "abA")
    h, k = height(H, 4), width(H, 4)
    oracle_h, oracle_w = brute_force_oracle(H, conj_len=2)
    assert (h.n, k.m) == (oracle_h.n, oracle_w.m) == (2, 2)
    assert h.exact and h.verify() and k.verify()


@pytest.mark.parametrize("gens, expected", [
    (("a",), (1, 1)),
    (("ab",), (1, 1)),
    (("aa",), (2, 2)),
    (("aaa",), (3, 3)),
    (("baB",), (1, 1)),
])
def test_height_and_width_match_oracle(gens, expected):
    H = subgroup(*gens)
    h, k = height(H, 4), width(H, 4)
    oracle_h, oracle_w = brute_force_oracle(H, conj_len=3)
    assert (h.n, k.m) == (oracle_h.n, oracle_w.m) == expected
    assert h.exact


@pytest.mark.property_based
@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=10, deadline=None)
def test_malnormal_subgroups_have_height_and_width_one(seed):
    H = random_independent_subgroup(2, 6, seed=seed)
    h, k = height(H, 3), width(H, 3)
    assert (h.n, k.m) == (1, 1)
    assert h.exact


@pytest.mark.property_based
@given(words(max_size=4), words(max_size=4))
@settings(max_examples=25, deadline=None)
def test_height_descent_is_monotone_in_depth(g1, g2):
    H = StallingsGraph.from_generators(2, [g1, g2])
    certificates = [height(H, depth) for depth in (1, 2, 3)]
    counts = [c.n for c in certificates]
    assert counts == sorted(counts)
    for shallow, deep in zip(certificates, certificates[1:]):
        if shallow.exact:
            assert deep.exact and deep.n == shallow.n
