"""Tests for reduced words, shortlex order and conjugacy."""

import random

import pytest
from hypothesis import given, settings

from conftest import w, words
from stablekit.errors import RankMismatchError, WordParseError
from stablekit.words import (FreeWord, are_conjugate, ball, ball_size, cyclic_reduce, distance, multiply,
                             parse_word, random_word, shortlex_min, sphere)


def test_parse_and_render():
    assert str(parse_word("abAB")) == "abAB"
    assert parse_word("").is_identity()
    assert parse_word("abc").rank == 3
    assert str(parse_word("aAb")) == "b"


def test_parse_rejects_bad_characters():
    with pytest.raises(WordParseError) as info:
        parse_word("aA b")
    assert info.value.position == 2


def test_parse_rejects_letters_beyond_rank():
    with pytest.raises(WordParseError):
        parse_word("abc", rank=2)


def test_rank_mismatch_on_product():
    with pytest.raises(RankMismatchError):
        parse_word("a", 2) * parse_word("a", 3)


def test_free_cancellation():
    assert w("ab") * w("BA") == FreeWord.identity(2)
    assert str(w("abA") * w("aB")) == "a"
    assert multiply(w("abA"), w("aB")) == w("a")


def test_shortlex_letter_order():
    assert sorted([w("B"), w("b"), w("A"), w("a")]) == [w("a"), w("A"), w("b"), w("B")]
    assert shortlex_min([w("ab"), w("B"), w("aa")]) == w("B")


def test_powers_of_non_cyclically_reduced_words():
    assert str(w("baB") ** 3) == "baaaB"
    assert str(w("ab") ** -2) == "BABA"
    assert (w("ab") ** 0).is_identity()


def test_cyclic_reduce_splits_conjugator():
    core, conj = cyclic_reduce(w("bbaBB"))
    assert str(core) == "a"
    assert str(conj) == "bb"


def test_are_conjugate_returns_least_witness():
    ok, g = are_conjugate(w("a"), w("baB"))
    assert ok
    assert g == w("b")
    assert are_conjugate(w("a"), w("b")) == (False, None)


def test_ball_matches_closed_formula():
    for radius in range(5):
        assert len(list(ball(2, radius))) == ball_size(2, radius)
    assert len(sphere(3, 2)) == 6 * 5


def test_ball_is_shortlex_sorted():
    elements = list(ball(2, 3))
    assert elements == sorted(elements)


def test_random_word_is_reduced_of_requested_length():
    rng = random.Random(7)
    for _ in range(20):
        x = random_word(2, 9, rng)
        assert len(x) == 9


@pytest.mark.property_based
@given(words(), words(), words())
@settings(max_examples=100)
def test_product_is_associative(x, y, z):
    assert (x * y) * z == x * (y * z)


@pytest.mark.property_based
@given(words())
@settings(max_examples=100)
def test_inverse_cancels(x):
    assert (x * ~x).is_identity()
    assert (~x * x).is_identity()


@pytest.mark.property_based
@given(words(), words())
@settings(max_examples=100)
def test_conjugates_are_detected(x, g):
    ok, h = are_conjugate(x, x.conjugate_by(g))
    assert ok
    assert h * x * ~h == x.conjugate_by(g)


@pytest.mark.property_based
@given(words(), words(), words())
@settings(max_examples=100)
def test_distance_is_a_metric(x, y, z):
    assert distance(x, y) == distance(y, x)
    assert distance(x, z) <= distance(x, y) + distance(y, z)
