"""Tests for quasimorphism descriptors, traces and extension."""

import math
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import subgroup, w, words
from stablekit.config import MEMO_LIMIT
from stablekit.errors import (IncompatibleFamilyError, InfiniteIndexRequiredError, NotMalnormalError,
                              OracleMismatchError, QuasimorphismSpecError, RankMismatchError)
from stablekit.qmorph import (Alternated, Brooks, Homogenized, Homomorphism, Intrinsic, Perturbed, Quasimorphism,
                              Restriction, Scale, Sum, alternate, basis_counting, brute_force_contributions,
                              check_compatibility, contributing_cosets, cyclic_count, defect, homogenize,
                              invisible_class_demo, is_alternating, psi_extend, restriction_error,
                              simultaneous_extend, theta_extend, trace, zero_on)
from stablekit.stallings import StallingsGraph
from stablekit.treegeo import CosetRef
from stablekit.utils import BoundedMemo
from stablekit.words import FreeWord, ball, cyclic_reduce


class Lopsided(Quasimorphism):
    """Word length plus the a-exponent; not alternating."""

    rank = 2

    def evaluate(self, g):
        return float(len(g) + g.exponent_sum(1))


def brooks_ab():
    return Brooks(2, ((w("ab"), 1.0),))


def counting_on(H, values):
    return Intrinsic(H, Homomorphism(len(values), tuple(values)))


def test_brooks_counts_overlapping_occurrences():
    q = brooks_ab()
    assert q(w("abab")) == 2.0
    assert q(w("BABA")) == -2.0
    assert Brooks(2, ((w("aa"), 1.0),))(w("aaa")) == 2.0


def test_homomorphism_reads_exponent_sums():
    assert Homomorphism(2, (1.0, 0.0))(w("aaaaaBBa")) == 6.0
    assert Homomorphism(2, (1.0, 0.0)).claimed_defect == 0.0
    with pytest.raises(QuasimorphismSpecError):
        Homomorphism(2, (1.0,))


def test_combinators():
    q = brooks_ab()
    assert Sum((q, Scale(2.0, q)))(w("ab")) == 3.0
    assert Alternated(Brooks(2, ((w("aa"), 1.0),)))(w("aaa")) == 2.0
    with pytest.raises(RankMismatchError):
        Sum((q, Homomorphism(3, (1.0, 0.0, 0.0))))


def test_subgroup_quasimorphisms_reject_outside_elements():
    H = subgroup("a")
    q = counting_on(H, [1.0])
    assert q(w("aaa")) == 3.0
    with pytest.raises(ValueError):
        q(w("b"))
    with pytest.raises(ValueError):
        Restriction(brooks_ab(), H)(w("ab"))


def test_intrinsic_spells_in_the_basis():
    H = subgroup("ab", "ba")
    q = Intrinsic(H, Homomorphism(2, (1.0, 10.0)))
    basis = H.generators()
    assert q(basis[0] * basis[0] * ~basis[1]) == -8.0


def test_homogenization():
    assert homogenize(brooks_ab(), w("ab"), 8) == 1.0
    assert homogenize(brooks_ab(), w("ab"), exact=True) == 1.0
    assert homogenize(brooks_ab(), w("ba"), exact=True) == 1.0
    assert Homogenized(brooks_ab(), 4)(w("abab")) == 2.0
    with pytest.raises(QuasimorphismSpecError):
        Homogenized(Alternated(brooks_ab()), exact=True)


def test_cyclic_count_wraps_around():
    assert cyclic_count(w("ba"), w("ab")) == 1
    assert cyclic_count(w("a"), w("aa")) == 1
    assert cyclic_count(FreeWord.identity(2), w("a")) == 0


def test_defect_of_homomorphism_is_zero():
    report = defect(Homomorphism(2, (1.0, -1.0)), 2)
    assert report.value == 0.0
    assert report.mode == "exhaustive"


def test_defect_scales_linearly():
    base = defect(brooks_ab(), 2).value
    assert base > 0
    assert defect(Scale(2.0, brooks_ab()), 2).value == 2 * base


def test_defect_is_sampled_beyond_the_grid_limit():
    report = defect(brooks_ab(), 6, sample_size=300, seed=1)
    assert report.mode == "sampled"
    assert report.pairs == 300
    assert report.value == defect(brooks_ab(), 6, sample_size=300, seed=1).value


def test_trace_on_a_line():
    H = subgroup("a")
    here = CosetRef(H, FreeWord.identity(2))
    assert str(trace(here, w("aaaaa"), 0)) == "aaaaa"
    assert trace(here, w("aaa"), 4).is_zero()
    assert trace(CosetRef(H, w("b")), w("aaa"), 0).is_zero()


def test_trace_averages_over_ties():
    H = subgroup("aa")
    result = trace(CosetRef(H, FreeWord.identity(2)), w("aaaaaaa"), 0)
    assert sum(weight for _, weight in result.terms) == pytest.approx(1.0)
    assert result.apply(counting_on(H, [1.0])) == pytest.approx(3.5)


def test_contributing_cosets_follow_the_geodesic():
    H = subgroup("a")
    found = contributing_cosets(H, w("baaaaaB"), 0)
    assert list(found) == [CosetRef(H, w("b"))]
    assert found == brute_force_contributions(H, w("baaaaaB"), 0)


def test_theta_on_a_line():
    H = subgroup("a")
    theta = theta_extend(H, counting_on(H, [1.0]), D=0)
    assert theta(w("aaaaa")) == 5.0
    assert theta(w("bbb")) == 0.0
    assert theta(w("baaaaaB")) == 5.0
    assert theta_extend(H, counting_on(H, [1.0]))(w("aaa")) == 0.0


def test_psi_restricts_to_the_homomorphism():
    H = subgroup("a")
    psi = psi_extend(H, counting_on(H, [1.0]), N=8)
    for k in range(-6, 7):
        assert psi(w("a") ** k) == float(k)
    assert restriction_error(psi, H, counting_on(H, [1.0]), 4) == 0.0


def test_theta_alternates_non_alternating_input():
    H = subgroup("a")
    q = Lopsided()
    assert not is_alternating(q)
    theta = theta_extend(H, q, D=0)
    assert isinstance(theta.inner, Alternated)
    assert theta(w("aaaaa")) == 5.0


def test_oracle_check_passes_on_cyclic_subgroup():
    H = subgroup("ab")
    theta = theta_extend(H, counting_on(H, [1.0]), D=1, check_oracle=True)
    assert theta(w("ababab")) == 3.0


def test_oracle_mismatch_is_reported(monkeypatch):
    H = subgroup("a")
    theta = theta_extend(H, counting_on(H, [1.0]), D=0, check_oracle=True)
    monkeypatch.setattr("stablekit.qmorph.brute_force_contributions", lambda *args: {})
    with pytest.raises(OracleMismatchError):
        theta(w("aaaaa"))


def test_perturbed_vanishes_near_the_given_subgroups():
    H = subgroup("a", "bab")
    inner = counting_on(H, [1.0, 1.0])
    perturbed = Perturbed(inner, H, (subgroup("a"),), 1)
    assert perturbed(w("aaaa")) == 0.0
    assert perturbed.in_thickening(w("aaaa"))
    assert perturbed(w("babbab")) == 2.0


def test_compatibility_detects_conjugate_disagreement():
    pairs = [(subgroup("a"), counting_on(subgroup("a"), [1.0])),
             (subgroup("baB"), counting_on(subgroup("baB"), [2.0]))]
    report = check_compatibility(pairs, 3)
    assert not report.compatible
    first = report.violations[0]
    assert (first.first_index, first.second_index) == (0, 1)
    assert first.conjugator * first.x * ~first.conjugator == first.y


def test_compatibility_accepts_agreeing_family():
    pairs = [(subgroup("a"), counting_on(subgroup("a"), [1.0])),
             (subgroup("baB"), counting_on(subgroup("baB"), [1.0]))]
    assert check_compatibility(pairs, 3).compatible


def test_simultaneous_extension_refuses_incompatible_family():
    pairs = [(subgroup("a"), counting_on(subgroup("a"), [1.0])),
             (subgroup("baB"), counting_on(subgroup("baB"), [2.0]))]
    with pytest.raises(IncompatibleFamilyError) as info:
        simultaneous_extend(pairs)
    assert info.value.exit_code == 2
    assert info.value.payload()["report"]["compatible"] is False


def test_simultaneous_extension_refuses_non_malnormal():
    H = subgroup("aa")
    with pytest.raises(NotMalnormalError):
        simultaneous_extend([(H, counting_on(H, [1.0]))])


def test_simultaneous_extension_of_transverse_lines():
    A, B = subgroup("a"), subgroup("b")
    pairs = [(A, counting_on(A, [1.0])), (B, counting_on(B, [1.0]))]
    q = simultaneous_extend(pairs, N=8)
    assert restriction_error(q, A, pairs[0][1], 2) == 0.0
    assert restriction_error(q, B, pairs[1][1], 2) == 0.0


def test_basis_counting_takes_value_one_on_first_generator():
    H = subgroup("aab", "bba")
    q = basis_counting(H)
    assert q(H.generators()[0]) == 1.0
    assert zero_on(H)(H.generators()[1]) == 0.0


@pytest.mark.property_based
@given(words(max_size=6))
@settings(max_examples=60)
def test_brooks_is_alternating(x):
    q = brooks_ab()
    assert q(~x) == -q(x)


@pytest.mark.property_based
@given(words(max_size=5))
@settings(max_examples=40, deadline=None)
def test_smart_enumeration_matches_brute_force(x):
    H = subgroup("ab", "bbA")
    assert contributing_cosets(H, x, 1) == brute_force_contributions(H, x, 1)


def test_alternate_is_idempotent():
    once = alternate(Lopsided())
    assert isinstance(once, Alternated)
    assert alternate(once) is once
    assert once(w("ab")) == -once(w("BA"))


def test_invisible_class_demo_refuses_bad_families():
    with pytest.raises(NotMalnormalError):
        invisible_class_demo([subgroup("aa")], seed=0)
    with pytest.raises(InfiniteIndexRequiredError):
        invisible_class_demo([subgroup("aa", "b", "abA")], seed=0)


def test_homogenized_power_mode_checks_rank_and_domain():
    with pytest.raises(RankMismatchError):
        Homogenized(brooks_ab(), 4)(w("ab", rank=3))
    H = subgroup("a")
    with pytest.raises(ValueError):
        Homogenized(counting_on(H, [1.0]), 4)(w("b"))


def test_memos_forget_old_entries():
    psi = Homogenized(brooks_ab(), 4, _memo=BoundedMemo(2))
    for text in ("ab", "abab", "ba", "aabb"):
        psi(w(text))
    assert len(psi._memo) == 2
    assert psi(w("abab")) == 2.0
    assert theta_extend(subgroup("a"), counting_on(subgroup("a"), [1.0]))._memo.limit == MEMO_LIMIT


@pytest.mark.property_based
@given(words(max_size=6), st.sampled_from(["ab", "aab", "abA"]))
@settings(max_examples=60, deadline=None)
def test_power_homogenization_approaches_exact_mode(x, pattern):
    core, _ = cyclic_reduce(x)
    q = Brooks(2, ((w(pattern), 1.0),))
    N = 16
    power = Homogenized(q, N)(core)
    exact = Homogenized(q, N, exact=True)(core)
    assert abs(power - exact) <= (len(pattern) - 1) / N + 1e-12


def _thickened_by_enumeration(h, K, margin):
    for u in ball(2, margin):
        x = ~u * h
        vertex, read = K.read_prefix(x)
        if len(x) - read + len(K.tree_paths()[vertex]) <= margin:
            return True
    return False


@pytest.mark.property_based
@given(words(max_size=8), st.sampled_from(["a", "ab", "baB"]), st.integers(min_value=0, max_value=2))
@settings(max_examples=80, deadline=None)
def test_thickening_matches_enumeration(h, gen, margin):
    K = subgroup(gen)
    perturbed = Perturbed(Homomorphism(2, (1.0, 0.0)), StallingsGraph.whole_group(2), (K,), margin)
    assert perturbed.in_thickening(h) == _thickened_by_enumeration(h, K, margin)


def test_simultaneous_extension_restricts_to_a_compatible_family():
    A, C = subgroup("a"), subgroup("baB")
    pairs = [(A, counting_on(A, [1.0])), (C, counting_on(C, [1.0]))]
    q = simultaneous_extend(pairs)
    restricted = [(H, Restriction(q, H)) for H, _ in pairs]
    assert check_compatibility(restricted, 3).compatible
    assert restriction_error(q, A, pairs[0][1], 3) == 0.0
    assert restriction_error(q, C, pairs[1][1], 3) == 0.0


def test_simultaneous_extension_over_a_nested_pair_finishes():
    # <a, bAbb> is malnormal and contains <a>
    H, A = subgroup("a", "bAbb"), subgroup("a")
    pairs = [(H, counting_on(H, [1.0, 0.0])), (A, counting_on(A, [1.0]))]
    started = time.monotonic()
    q = simultaneous_extend(pairs)
    assert restriction_error(q, A, pairs[1][1], 3) == 0.0
    assert math.isfinite(restriction_error(q, H, pairs[0][1], 3))
    assert time.monotonic() - started < 120
