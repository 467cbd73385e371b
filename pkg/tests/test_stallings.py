"""Tests for folded core graphs, pullbacks and malnormality."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import subgroup, w, words
from stablekit.errors import BudgetExceededError
from stablekit.stallings import (StallingsGraph, conjugacy_class_reps, conjugacy_key, double_coset_scan,
                                 fiber_product, intersect, is_malnormal, random_independent_subgroup, sample_independent_basis)
from stablekit.words import FreeWord, ball


def test_cyclic_subgroup_graph():
    H = subgroup("a")
    assert H.vertex_count == 1
    assert H.subgroup_rank() == 1
    assert H.index() == math.inf
    assert H.contains(w("aaaa")) and not H.contains(w("ab"))


def test_index_two_subgroup_is_complete():
    H = subgroup("aa", "b", "abA")
    assert H.index() == 2
    assert not H.contains(w("ab"))
    assert H.contains(w("abA"))


def test_graph_is_canonical():
    assert subgroup("aa", "aaaa") == subgroup("aa")
    assert subgroup("ab", "b") == subgroup("a", "b") == StallingsGraph.whole_group(2)
    assert hash(subgroup("ba", "ab")) == hash(subgroup("ab", "ba"))


def test_identity_generators_are_dropped():
    assert subgroup("", "aA") == StallingsGraph.trivial(2)


def test_generators_form_a_basis_read_from_the_graph():
    H = subgroup("baB")
    assert [str(g) for g in H.generators()] == ["baB"]
    assert H.quasiconvexity_constant() == 1


def test_intersection_of_powers():
    K = intersect(subgroup("aa"), subgroup("aaa"))
    assert K == subgroup("aaaaaa")


def test_intersection_of_transverse_cyclics_is_trivial():
    assert intersect(subgroup("a"), subgroup("b")).is_trivial()


def test_double_coset_scan_finds_conjugator():
    reps = double_coset_scan(subgroup("a"), subgroup("baB"))
    assert reps[0].conjugator.is_identity() and not reps[0].infinite
    assert [str(r.conjugator) for r in reps[1:]] == ["B"]
    assert reps[1].infinite
    assert reps[1].intersection == subgroup("a")


def test_malnormality():
    assert is_malnormal(subgroup("a")) == (True, None)
    ok, witness = is_malnormal(subgroup("aa"))
    assert not ok
    assert witness == w("a")


def test_conjugacy_class_reps_warns_for_non_malnormal():
    reps, warnings = conjugacy_class_reps(subgroup("a"), subgroup("aa"))
    assert warnings
    assert len(reps) == 1
    assert reps[0][0] == subgroup("aa")


def test_conjugacy_key_identifies_conjugates():
    assert conjugacy_key(subgroup("a")) == conjugacy_key(subgroup("baB"))
    assert conjugacy_key(subgroup("a")) != conjugacy_key(subgroup("b"))
    assert conjugacy_key(StallingsGraph.trivial(2)) is None


def test_sampler_is_seeded():
    first = sample_independent_basis(2, 6, seed=3)
    assert first == sample_independent_basis(2, 6, seed=3)
    H = StallingsGraph.from_generators(2, list(first))
    assert H.subgroup_rank() == 2 and is_malnormal(H)[0]


def test_sampler_gives_up_with_budget_error():
    with pytest.raises(BudgetExceededError):
        # F_1 has no free subgroup of rank two
        sample_independent_basis(1, 1, seed=0, retries=3)


def test_random_independent_subgroup_is_malnormal_of_infinite_index():
    H = random_independent_subgroup(2, 6, seed=5)
    assert H.subgroup_rank() == 2
    assert H.index() == math.inf
    assert is_malnormal(H)[0]
    assert H == random_independent_subgroup(2, 6, seed=5)


def test_to_dict_export():
    data = subgroup("aa").to_dict()
    assert data["rank"] == 2 and data["vertices"] == 2 and data["basepoint"] == 0
    assert sorted(map(tuple, data["edges"])) == [(0, 1, 1), (1, 1, 0)]


@pytest.mark.property_based
@given(words(max_size=5), words(max_size=5), words(max_size=6))
@settings(max_examples=60)
def test_membership_of_products(g1, g2, x):
    H = StallingsGraph.from_generators(2, [g1, g2])
    assert H.contains(g1 * ~g2 * g1)
    if H.contains(x):
        basis = H.generators()
        rebuilt = FreeWord.identity(2)
        for index, sign in H.spell(x):
            rebuilt = rebuilt * (basis[index] if sign > 0 else ~basis[index])
        assert rebuilt == x


@pytest.mark.property_based
@given(words(max_size=4), words(max_size=4))
@settings(max_examples=40)
def test_intersection_membership_pointwise(g1, g2):
    H1 = StallingsGraph.from_generators(2, [g1, w("b")])
    H2 = StallingsGraph.from_generators(2, [g2, w("a")])
    K = intersect(H1, H2)
    for x in ball(2, 3):
        assert K.contains(x) == (H1.contains(x) and H2.contains(x))


def test_maximal_runs_of_a_line():
    H = subgroup("a")
    assert list(H.maximal_runs(w("baaaB"))) == [(1, 0, 4, 0)]
    assert list(H.maximal_runs(w("bb"))) == []


def test_index_two_rank_from_nielsen_schreier():
    H = subgroup("aa", "b", "abA")
    assert H.subgroup_rank() == H.index() * (2 - 1) + 1


def _component_index(H1, H2, components, g):
    """Pullback component of the double coset H1·g·H2, read off a split g = p·q⁻¹."""
    v1, read = H1.read_prefix(g)
    v2 = H2.read(~g[read:])
    assert v2 is not None, f"{g} does not split across the two graphs"
    return next(i for i, c in enumerate(components) if (v1, v2) in c.vertices)


@pytest.mark.property_based
@given(words(max_size=3), words(max_size=3), words(max_size=3))
@settings(max_examples=30, deadline=None)
def test_double_coset_scan_lists_each_infinite_double_coset_once(g1, g2, g3):
    H1 = StallingsGraph.from_generators(2, [g1, g2])
    H2 = StallingsGraph.from_generators(2, [g3, w("ab")])
    components = fiber_product(H1, H2)
    scanned = [_component_index(H1, H2, components, rep.conjugator)
               for rep in double_coset_scan(H1, H2) if rep.infinite]
    assert len(scanned) == len(set(scanned))
    for g in ball(2, 3):
        if intersect(H1, H2.conjugate(g)).has_cycle():
            assert _component_index(H1, H2, components, g) in scanned


@pytest.mark.property_based
@given(words(max_size=5), words(max_size=5), st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=40, deadline=None)
def test_folding_is_idempotent_and_labels_are_canonical(g1, g2, seed):
    H = StallingsGraph.from_generators(2, [g1, g2])
    assert StallingsGraph.from_generators(2, H.generators()) == H
    assert StallingsGraph.from_generators(2, [g2, g1, g1 * g2]) == H
    others = list(range(1, H.vertex_count))
    random.Random(seed).shuffle(others)
    relabel = dict(zip(range(1, H.vertex_count), others))
    relabel[0] = 0
    shuffled = [(relabel[s], label, relabel[d]) for s, label, d in H.edges]
    again = StallingsGraph.from_edges(2, H.vertex_count, shuffled)
    assert again == H
    assert again.to_dict() == H.to_dict()


def _permutation_subgroup(rank, index, seed):
    """Stabilizer of 0 under a transitive action of F_rank on ``index`` points."""
    rng = random.Random(seed)
    edges = []
    for letter in range(1, rank + 1):
        order = list(range(index))
        rng.shuffle(order)
        edges.extend((order[i], letter, order[(i + 1) % index]) for i in range(index))
    return StallingsGraph.from_edges(rank, index, edges)


@pytest.mark.property_based
@given(st.integers(min_value=2, max_value=3), st.integers(min_value=1, max_value=6),
       st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=40, deadline=None)
def test_finite_index_rank_follows_nielsen_schreier(rank, index, seed):
    H = _permutation_subgroup(rank, index, seed)
    assert H.index() == index
    assert H.subgroup_rank() == index * (rank - 1) + 1
