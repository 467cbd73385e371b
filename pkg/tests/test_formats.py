"""Tests for subgroup files, quasimorphism descriptors and experiment specs."""

import json

import pytest

from conftest import subgroup, w
from stablekit.errors import ExperimentSpecError, QuasimorphismSpecError, RankMismatchError, SubgroupFileError
from stablekit.formats import (experiment_argv, family_from_dict, load_experiment, parse_subgroup_text,
                               quasimorphism_from_dict, read_subgroup_file, validate_experiment)
from stablekit.qmorph import Brooks, Homogenized, ThetaExtended


def test_subgroup_text_with_rank_and_comments():
    H = parse_subgroup_text("# even a-exponent\nrank 2\n\naa\nb   # second\nabA\n")
    assert H == subgroup("aa", "b", "abA")
    assert H.index() == 2


def test_rank_is_inferred_from_letters():
    assert parse_subgroup_text("c\n").rank == 3


def test_bad_rank_line():
    with pytest.raises(SubgroupFileError, match=":1:"):
        parse_subgroup_text("rank two\na\n")


def test_bad_word_in_file():
    with pytest.raises(SubgroupFileError):
        parse_subgroup_text("a1\n")


def test_declared_rank_conflicts_with_requested():
    with pytest.raises(RankMismatchError):
        parse_subgroup_text("rank 3\na\n", rank=2)


def test_missing_file(tmp_path):
    with pytest.raises(SubgroupFileError):
        read_subgroup_file(str(tmp_path / "absent.sub"))


def test_brooks_descriptor():
    q = quasimorphism_from_dict({"variant": "brooks", "rank": 2, "terms": [["ab", 1]]})
    assert isinstance(q, Brooks)
    assert q(w("abab")) == 2.0


def test_nested_descriptor():
    q = quasimorphism_from_dict({
        "variant": "sum",
        "terms": [
            {"variant": "homomorphism", "values": [1, 0]},
            {"variant": "scale", "coefficient": -1,
             "inner": {"variant": "homogenized", "N": 4, "base": {"variant": "brooks", "rank": 2,
                                                                  "terms": [["ab", 1]]}}},
        ],
    })
    assert q(w("ab")) == 0.0


def test_homogenized_exact_flag():
    q = quasimorphism_from_dict({"variant": "homogenized", "exact": True,
                                 "base": {"variant": "brooks", "rank": 2, "terms": [["ab", 1]]}})
    assert isinstance(q, Homogenized) and q.exact


def test_subgroup_homomorphism_accepts_inverse_basis_words():
    q = quasimorphism_from_dict({"variant": "subgroup-homomorphism", "subgroup": ["baB"],
                                 "values": {"bAB": 2}})
    assert q(w("baaB")) == -4.0


def test_subgroup_homomorphism_rejects_non_basis_words():
    with pytest.raises(QuasimorphismSpecError, match="basis"):
        quasimorphism_from_dict({"variant": "subgroup-homomorphism", "subgroup": ["a"], "values": {"aa": 1}})


def test_theta_descriptor():
    q = quasimorphism_from_dict({"variant": "theta", "rank": 2, "subgroup": ["a"], "D": 0,
                                 "inner": {"variant": "subgroup-homomorphism", "subgroup": ["a"],
                                           "values": {"a": 1}}})
    assert isinstance(q, ThetaExtended)
    assert q(w("baaaaaB")) == 5.0


def test_theta_descriptor_takes_rank_from_caller():
    data = {"variant": "psi", "subgroup": ["a"], "D": 0, "N": 8,
            "inner": {"variant": "subgroup-homomorphism", "values": {"a": 1}, "subgroup": ["a"]}}
    assert quasimorphism_from_dict(data, 2)(w("bAAB")) == -2.0


def test_extension_without_rank_is_refused():
    data = {"variant": "theta", "subgroup": ["a"],
            "inner": {"variant": "subgroup-homomorphism", "subgroup": ["a"], "values": {"a": 1}}}
    with pytest.raises(QuasimorphismSpecError, match="rank"):
        quasimorphism_from_dict({"variant": "scale", "coefficient": 2, "inner": data})


def test_undeclared_rank_is_shared_by_the_whole_tree():
    q = quasimorphism_from_dict({"variant": "sum", "terms": [
        {"variant": "brooks", "terms": [["a", 1]]},
        {"variant": "brooks", "terms": [["b", 1]]},
    ]})
    assert q.rank == 2
    assert q(w("ab")) == 2.0


@pytest.mark.parametrize("data", [
    {"variant": "nonsense"},
    {"values": [1]},
    {"variant": "homomorphism"},
    {"variant": "brooks", "rank": 2, "terms": [["", 1]]},
    {"variant": "scale", "coefficient": "x", "inner": {"variant": "homomorphism", "values": [1]}},
])
def test_invalid_descriptors(data):
    with pytest.raises(QuasimorphismSpecError):
        quasimorphism_from_dict(data)


def test_family_with_implicit_subgroup():
    pairs = family_from_dict({"rank": 2, "pairs": [
        {"subgroup": ["a"], "qm": {"variant": "subgroup-homomorphism", "values": {"a": 1}}},
        {"subgroup": ["b"], "qm": {"variant": "subgroup-homomorphism", "values": {"b": 3}}},
    ]})
    assert [H for H, _ in pairs] == [subgroup("a"), subgroup("b")]
    assert pairs[1][1](w("bb")) == 6.0


def test_family_rank_comes_from_every_pair():
    pairs = family_from_dict({"pairs": [
        {"subgroup": ["a"], "qm": {"variant": "subgroup-homomorphism", "values": {"a": 1}}},
        {"subgroup": ["b"], "qm": {"variant": "subgroup-homomorphism", "values": {"b": 1}}},
    ]})
    assert [H.rank for H, _ in pairs] == [2, 2]


def test_family_needs_pairs():
    with pytest.raises(QuasimorphismSpecError):
        family_from_dict({"rank": 2})


def test_experiment_validation():
    spec = {"operation": "qm defect", "inputs": {"qm": "q.json"}, "params": {"L": 3, "seed": 1}}
    assert validate_experiment(spec) is spec
    with pytest.raises(ExperimentSpecError, match="unknown key"):
        validate_experiment({**spec, "extra": 1})
    with pytest.raises(ExperimentSpecError, match="'L'"):
        validate_experiment({**spec, "params": {"L": 0}})
    with pytest.raises(ExperimentSpecError):
        validate_experiment({**spec, "params": {"depth": True}})
    with pytest.raises(ExperimentSpecError):
        validate_experiment({"inputs": {}})


def test_experiment_argv():
    spec = {
        "operation": "qm compat",
        "inputs": {"family": "fam.json", "subgroups": ["a.sub"]},
        "params": {"tolerance": 0.5, "L": 3, "x": ["ab", "b"]},
        "output": "out.json",
    }
    assert experiment_argv(spec) == [
        "qm", "compat", "--subgroup", "a.sub", "--family", "fam.json",
        "--L", "3", "--tol", "0.5", "--x", "ab,b", "--json-out", "out.json",
    ]


def test_load_experiment(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"operation": "height", "params": {"depth": 2}}))
    assert load_experiment(str(path))["operation"] == "height"
    path.write_text("{not json")
    with pytest.raises(ExperimentSpecError):
        load_experiment(str(path))
