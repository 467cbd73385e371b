"""File formats: subgroup files, quasimorphism descriptors and experiment specs.

A subgroup file holds one generator word per line. Blank lines and text
after ``#`` are ignored, and an optional ``rank n`` line fixes the ambient
rank (otherwise it is inferred from the largest letter).
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .errors import (ExperimentSpecError, QuasimorphismSpecError, RankMismatchError,
                     SubgroupFileError, WordParseError)
from .qmorph import (Alternated, Brooks, Homogenized, Homomorphism, Intrinsic, Quasimorphism,
                     Restriction, Scale, Sum, psi_extend, theta_extend)
from .stallings import StallingsGraph
from .words import FreeWord, parse_word


def _read_json(path: str, error: type) -> Any:
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except OSError as e:
        raise error(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise error(f"{path} is not valid JSON: {e}")


def parse_words(texts: Sequence[str], rank: Optional[int] = None) -> List[FreeWord]:
    """Parse several words into a common rank, inferred from all of them when omitted."""
    if rank is None:
        rank = max((parse_word(t).rank for t in texts), default=1)
    return [parse_word(t, rank) for t in texts]


def subgroup_from_words(texts: Sequence[str], rank: Optional[int] = None) -> StallingsGraph:
    words = parse_words(texts, rank)
    rank = words[0].rank if words else (rank or 1)
    return StallingsGraph.from_generators(rank, words)


def parse_subgroup_text(text: str, source: str = "<string>", rank: Optional[int] = None) -> StallingsGraph:
    """Parse the contents of a subgroup file.

    Raises:
        SubgroupFileError: on a malformed rank line or a bad word, with the line number
    """
    declared: Optional[int] = None
    words: List[str] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('rank'):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise SubgroupFileError(f"{source}:{number}: expected 'rank <positive integer>'")
            declared = int(parts[1])
            continue
        words.append(line)
    if declared is not None and rank is not None and declared != rank:
        raise RankMismatchError(declared, rank)
    rank = declared or rank
    try:
        return subgroup_from_words(words, rank)
    except WordParseError as e:
        raise SubgroupFileError(f"{source}: {e}")


def read_subgroup_file(path: str, rank: Optional[int] = None) -> StallingsGraph:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SubgroupFileError(f"cannot read {path}: {e}")
    return parse_subgroup_text(text, path, rank)


# -- quasimorphism descriptors ------------------------------------------------

def _subgroup_field(data: Dict, rank: Optional[int]) -> StallingsGraph:
    value = data.get("subgroup")
    if isinstance(value, dict):
        return subgroup_from_words(value.get("generators", []), value.get("rank", rank))
    if isinstance(value, list):
        return subgroup_from_words(value, data.get("rank", rank))
    raise QuasimorphismSpecError("'subgroup' must be a list of words or {rank, generators}")


def _require(data: Dict, key: str) -> Any:
    if key not in data:
        raise QuasimorphismSpecError(f"variant {data.get('variant')!r} needs {key!r}")
    return data[key]


def _subgroup_homomorphism(H: StallingsGraph, values: Dict[str, float]) -> Intrinsic:
    """Homomorphism on H given by its values on the basis ``H.generators()``."""
    basis = {str(g): i for i, g in enumerate(H.generators())}
    inverses = {str(~g): i for i, g in enumerate(H.generators())}
    result = [0.0] * len(basis)
    for word, value in values.items():
        if word in basis:
            result[basis[word]] = float(value)
        elif word in inverses:
            result[inverses[word]] = -float(value)
        else:
            raise QuasimorphismSpecError(
                f"{word!r} is not a basis element of {H}; basis is {sorted(basis)}")
    return Intrinsic(H, Homomorphism(len(result), tuple(result)))


def _implied_ranks(data: Any) -> List[int]:
    """Ranks implied by the ambient words and homomorphisms of a descriptor tree.

    The inner descriptor of an ``intrinsic`` variant is written in the
    subgroup basis and is skipped.

    Raises:
        QuasimorphismSpecError: on a malformed word
    """
    if isinstance(data, list):
        return [r for item in data for r in _implied_ranks(item)]
    if not isinstance(data, dict):
        return []
    texts: List[str] = []
    ranks: List[int] = []
    if data.get("variant") == "homomorphism" and isinstance(data.get("values"), list):
        ranks.append(len(data["values"]))
    for key, value in data.items():
        if key == "inner" and data.get("variant") == "intrinsic":
            continue
        if key in ("subgroup", "generators") and isinstance(value, list):
            texts += [v for v in value if isinstance(v, str)]
        elif key == "terms" and isinstance(value, list):
            texts += [t[0] for t in value if isinstance(t, list) and t and isinstance(t[0], str)]
            ranks += _implied_ranks([t for t in value if isinstance(t, dict)])
        elif key == "values" and isinstance(value, dict):
            texts += [k for k in value if isinstance(k, str)]
        elif isinstance(value, (dict, list)):
            ranks += _implied_ranks(value)
    try:
        ranks += [parse_word(t).rank for t in texts]
    except WordParseError as e:
        raise QuasimorphismSpecError(f"bad word in descriptor: {e}")
    return ranks


def _has_extension(data: Any) -> bool:
    if isinstance(data, list):
        return any(_has_extension(item) for item in data)
    if isinstance(data, dict):
        return data.get("variant") in ("theta", "psi") or any(
            _has_extension(v) for v in data.values() if isinstance(v, (dict, list)))
    return False


def descriptor_rank(data: Any) -> Optional[int]:
    """Declared rank of a descriptor tree, else the largest rank implied anywhere in it."""
    if isinstance(data, dict) and isinstance(data.get("rank"), int):
        return data["rank"]
    return max(_implied_ranks(data), default=None)


def quasimorphism_from_dict(data: Dict, rank: Optional[int] = None) -> Quasimorphism:
    """Build a descriptor from its JSON form.

    Without a declared rank the whole tree shares the rank of its largest
    letter. Extensions (``theta``, ``psi``) need the ambient rank stated,
    either in the descriptor or by the caller.

    Raises:
        QuasimorphismSpecError: on unknown variants or missing fields
    """
    if not isinstance(data, dict) or "variant" not in data:
        raise QuasimorphismSpecError("quasimorphism spec must be an object with a 'variant'")
    if rank is None and "rank" not in data and _has_extension(data):
        raise QuasimorphismSpecError(
            "extension variants need the ambient 'rank' (or --rank on the command line)")
    if rank is None:
        rank = descriptor_rank(data)
    variant = data["variant"]
    rank = data.get("rank", rank)
    try:
        if variant == "homomorphism":
            values = tuple(float(v) for v in _require(data, "values"))
            return Homomorphism(rank or len(values), values)
        if variant == "brooks":
            terms = [(t[0], float(t[1])) for t in _require(data, "terms")]
            words = parse_words([w for w, _ in terms], rank)
            return Brooks(words[0].rank, tuple(zip(words, (w for _, w in terms))))
        if variant == "homogenized":
            base = quasimorphism_from_dict(_require(data, "base"), rank)
            return Homogenized(base, int(data.get("N", 16)), bool(data.get("exact", False)))
        if variant == "sum":
            return Sum(tuple(quasimorphism_from_dict(t, rank) for t in _require(data, "terms")))
        if variant == "scale":
            return Scale(float(_require(data, "coefficient")),
                         quasimorphism_from_dict(_require(data, "inner"), rank))
        if variant == "alternated":
            return Alternated(quasimorphism_from_dict(_require(data, "inner"), rank))
        if variant == "restriction":
            H = _subgroup_field(data, rank)
            return Restriction(quasimorphism_from_dict(_require(data, "ambient"), H.rank), H)
        if variant == "intrinsic":
            H = _subgroup_field(data, rank)
            return Intrinsic(H, quasimorphism_from_dict(_require(data, "inner"), H.subgroup_rank()))
        if variant == "subgroup-homomorphism":
            return _subgroup_homomorphism(_subgroup_field(data, rank), _require(data, "values"))
        if variant in ("theta", "psi"):
            H = _subgroup_field(data, rank)
            inner = quasimorphism_from_dict(_require(data, "inner"), H.rank)
            D = data.get("D")
            if variant == "theta":
                return theta_extend(H, inner, D)
            return psi_extend(H, inner, D, int(data.get("N", 16)))
    except (TypeError, ValueError, IndexError) as e:
        raise QuasimorphismSpecError(f"bad {variant!r} spec: {e}")
    raise QuasimorphismSpecError(f"unknown quasimorphism variant {variant!r}")


def load_quasimorphism(path: str, rank: Optional[int] = None) -> Quasimorphism:
    return quasimorphism_from_dict(_read_json(path, QuasimorphismSpecError), rank)


def family_from_dict(data: Dict) -> List[Tuple[StallingsGraph, Quasimorphism]]:
    """Pairs (H_i, q_i) from {"rank": n, "pairs": [{"subgroup": [...], "qm": {...}}, ...]}."""
    if not isinstance(data, dict) or not isinstance(data.get("pairs"), list):
        raise QuasimorphismSpecError("family spec must be an object with a 'pairs' list")
    rank = descriptor_rank(data)
    pairs = []
    for entry in data["pairs"]:
        H = _subgroup_field(entry, rank)
        qm = dict(_require(entry, "qm"))
        if qm.get("variant") == "subgroup-homomorphism" and "subgroup" not in qm:
            q = _subgroup_homomorphism(H, _require(qm, "values"))
        else:
            q = quasimorphism_from_dict(qm, H.rank)
        pairs.append((H, q))
    return pairs


def load_family(path: str) -> List[Tuple[StallingsGraph, Quasimorphism]]:
    return family_from_dict(_read_json(path, QuasimorphismSpecError))


# -- experiment specs ----------------------------------------------------------

EXPERIMENT_KEYS = {"operation", "inputs", "params", "output"}
INPUT_KEYS = {"subgroups", "qm", "family"}
# parameter -> (type, minimum)
PARAM_RANGES: Dict[str, Tuple[type, float]] = {
    "rank": (int, 1),
    "depth": (int, 0),
    "D": (int, 0),
    "L": (int, 1),
    "N": (int, 1),
    "R": (int, 0),
    "seed": (int, 0),
    "tolerance": (float, 0),
    "word_length": (int, 1),
    "search_len": (int, 0),
    "sample": (int, 1),
    "C": (int, 0),
}
# word-valued and textual parameters passed through as strings
TEXT_PARAMS = {"word", "x", "reps", "level"}


def validate_experiment(data: Any, source: str = "<spec>") -> Dict:
    """Check an experiment spec against the schema.

    Raises:
        ExperimentSpecError: on unknown keys, missing operation or out-of-range parameters
    """
    if not isinstance(data, dict):
        raise ExperimentSpecError(f"{source}: experiment spec must be a JSON object")
    unknown = set(data) - EXPERIMENT_KEYS
    if unknown:
        raise ExperimentSpecError(f"{source}: unknown key(s) {sorted(unknown)}")
    if not isinstance(data.get("operation"), str) or not data["operation"].strip():
        raise ExperimentSpecError(f"{source}: 'operation' must be a non-empty string")
    inputs = data.get("inputs", {})
    if not isinstance(inputs, dict) or set(inputs) - INPUT_KEYS:
        raise ExperimentSpecError(f"{source}: 'inputs' accepts only {sorted(INPUT_KEYS)}")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ExperimentSpecError(f"{source}: 'params' must be an object")
    for key, value in params.items():
        if key in TEXT_PARAMS:
            continue
        if key not in PARAM_RANGES:
            raise ExperimentSpecError(f"{source}: unknown parameter {key!r}")
        kind, minimum = PARAM_RANGES[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or \
                (kind is int and not isinstance(value, int)) or value < minimum:
            raise ExperimentSpecError(f"{source}: parameter {key!r} must be {kind.__name__} >= {minimum}")
    if "output" in data and not isinstance(data["output"], str):
        raise ExperimentSpecError(f"{source}: 'output' must be a path")
    return data


def load_experiment(path: str) -> Dict:
    return validate_experiment(_read_json(path, ExperimentSpecError), path)


def experiment_argv(spec: Dict) -> List[str]:
    """Command-line arguments equivalent to a validated experiment spec."""
    argv = spec["operation"].split()
    inputs = spec.get("inputs", {})
    for path in inputs.get("subgroups", []):
        argv += ["--subgroup", path]
    if "qm" in inputs:
        argv += ["--qm", inputs["qm"]]
    if "family" in inputs:
        argv += ["--family", inputs["family"]]
    flags = {"tolerance": "--tol", "word_length": "--word-length", "search_len": "--search-len"}
    for key, value in sorted(spec.get("params", {}).items()):
        flag = flags.get(key, f"--{key}")
        if isinstance(value, list):
            argv += [flag, ",".join(str(v) for v in value)]
        else:
            argv += [flag, str(value)]
    if "output" in spec:
        argv += ["--json-out", spec["output"]]
    return argv
