"""Quasimorphisms on F_n and on its subgroups.

Descriptors are immutable and evaluation is pure. Quasimorphisms defined
only on a subgroup H report it as their ``domain`` and reject elements
outside it.

The extension operators work coset by coset: the trace of x on a coset gH
compares the closest-point projections of 1 and x, and the extension of a
quasimorphism on H sums its values on the traces over every coset.
"""

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .config import (DEFAULT_DEFECT_SAMPLE, DEFAULT_POWER_DEPTH, DEFAULT_SCALE, DEFAULT_TOLERANCE,
                     DEMO_TOLERANCE, DEMO_TRACE_THRESHOLD, DEMO_WORD_LENGTH, EXHAUSTIVE_GRID_LIMIT,
                     PROJECTION_SAMPLE_RADIUS, RESTRICTION_CHECK_RADIUS,
                     default_trace_threshold)
from .errors import (BudgetExceededError, IncompatibleFamilyError, InfiniteIndexRequiredError,
                     NotMalnormalError, OracleMismatchError, QuasimorphismSpecError,
                     RankMismatchError)
from .stallings import StallingsGraph, conjugacy_class_reps, is_malnormal, random_independent_subgroup
from .treegeo import CosetRef, canonicalize, geodesics_to_base, nearest_points, projection_gap
from .utils import BoundedMemo, log_debug, log_info, parallel_map
from .words import FreeWord, are_conjugate, ball, cyclic_reduce


class Quasimorphism:
    """Base class of every quasimorphism descriptor."""

    rank: int

    @property
    def domain(self) -> Optional[StallingsGraph]:
        """Subgroup the quasimorphism is defined on, None for all of F_n."""
        return None

    @property
    def claimed_defect(self) -> Optional[float]:
        """Proven defect bound when one is known."""
        return None

    def evaluate(self, g: FreeWord) -> float:
        raise NotImplementedError

    def __call__(self, g: FreeWord) -> float:
        return self.evaluate(g)

    def to_dict(self) -> Dict:
        raise NotImplementedError

    def _check(self, g: FreeWord) -> None:
        if g.rank != self.rank:
            raise RankMismatchError(g.rank, self.rank)
        domain = self.domain
        if domain is not None and not domain.contains(g):
            raise ValueError(f"{g or '1'} is outside the domain {domain}")


def _subgroup_dict(H: StallingsGraph) -> Dict:
    return {"rank": H.rank, "generators": [str(g) for g in H.generators()]}


@dataclass(frozen=True)
class Homomorphism(Quasimorphism):
    """Linear in the exponent sums, with one value per generator."""
    rank: int
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.rank:
            raise QuasimorphismSpecError(f"homomorphism needs {self.rank} value(s), got {len(self.values)}")

    @property
    def claimed_defect(self) -> Optional[float]:
        return 0.0

    def evaluate(self, g: FreeWord) -> float:
        self._check(g)
        return float(sum(self.values[abs(x) - 1] * (1 if x > 0 else -1) for x in g.letters))

    def to_dict(self) -> Dict:
        return {"variant": "homomorphism", "rank": self.rank, "values": list(self.values)}


@dataclass(frozen=True)
class Brooks(Quasimorphism):
    """Weighted overlapping subword counts, c_w(g) - c_{w^-1}(g)."""
    rank: int
    terms: Tuple[Tuple[FreeWord, float], ...]

    def __post_init__(self):
        for word, _ in self.terms:
            if word.rank != self.rank:
                raise RankMismatchError(word.rank, self.rank)
            if word.is_identity():
                raise QuasimorphismSpecError("counting word must be nonempty")

    def evaluate(self, g: FreeWord) -> float:
        self._check(g)
        total = 0.0
        for word, weight in self.terms:
            total += weight * (g.count_occurrences(word) - g.count_occurrences(~word))
        return total

    def to_dict(self) -> Dict:
        return {
            "variant": "brooks",
            "rank": self.rank,
            "terms": [[str(w), weight] for w, weight in self.terms],
        }


@dataclass(frozen=True)
class Sum(Quasimorphism):
    terms: Tuple[Quasimorphism, ...]

    def __post_init__(self):
        if not self.terms:
            raise QuasimorphismSpecError("sum needs at least one term")
        for term in self.terms:
            if term.rank != self.terms[0].rank:
                raise RankMismatchError(term.rank, self.terms[0].rank)

    @property
    def rank(self) -> int:
        return self.terms[0].rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        for term in self.terms:
            if term.domain is not None:
                return term.domain
        return None

    @property
    def claimed_defect(self) -> Optional[float]:
        bounds = [t.claimed_defect for t in self.terms]
        return None if any(b is None for b in bounds) else float(sum(bounds))

    def evaluate(self, g: FreeWord) -> float:
        return float(sum(term.evaluate(g) for term in self.terms))

    def to_dict(self) -> Dict:
        return {"variant": "sum", "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class Scale(Quasimorphism):
    coefficient: float
    inner: Quasimorphism

    @property
    def rank(self) -> int:
        return self.inner.rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        return self.inner.domain

    @property
    def claimed_defect(self) -> Optional[float]:
        bound = self.inner.claimed_defect
        return None if bound is None else abs(self.coefficient) * bound

    def evaluate(self, g: FreeWord) -> float:
        return self.coefficient * self.inner.evaluate(g)

    def to_dict(self) -> Dict:
        return {"variant": "scale", "coefficient": self.coefficient, "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class Restriction(Quasimorphism):
    """An ambient quasimorphism read on a subgroup only."""
    ambient: Quasimorphism
    subgroup: StallingsGraph

    def __post_init__(self):
        if self.ambient.rank != self.subgroup.rank:
            raise RankMismatchError(self.ambient.rank, self.subgroup.rank)

    @property
    def rank(self) -> int:
        return self.subgroup.rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        return self.subgroup

    @property
    def claimed_defect(self) -> Optional[float]:
        return self.ambient.claimed_defect

    def evaluate(self, g: FreeWord) -> float:
        self._check(g)
        return self.ambient.evaluate(g)

    def to_dict(self) -> Dict:
        return {"variant": "restriction", "ambient": self.ambient.to_dict(),
                "subgroup": _subgroup_dict(self.subgroup)}


@dataclass(frozen=True)
class Intrinsic(Quasimorphism):
    """A quasimorphism on the free group of the subgroup's basis, pulled back to H.

    Elements of H are spelled in ``subgroup.generators()``; basis element i
    becomes letter i + 1 of the inner quasimorphism's free group.
    """
    subgroup: StallingsGraph
    inner: Quasimorphism

    def __post_init__(self):
        if self.inner.rank != self.subgroup.subgroup_rank():
            raise QuasimorphismSpecError(
                f"inner quasimorphism has rank {self.inner.rank}, subgroup basis has "
                f"{self.subgroup.subgroup_rank()} element(s)")

    @property
    def rank(self) -> int:
        return self.subgroup.rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        return self.subgroup

    @property
    def claimed_defect(self) -> Optional[float]:
        return self.inner.claimed_defect

    def evaluate(self, g: FreeWord) -> float:
        self._check(g)
        spelled = self.subgroup.spell(g)
        word = FreeWord(self.inner.rank, [(i + 1) * sign for i, sign in spelled])
        return self.inner.evaluate(word)

    def to_dict(self) -> Dict:
        return {"variant": "intrinsic", "subgroup": _subgroup_dict(self.subgroup),
                "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class Alternated(Quasimorphism):
    """(q(g) - q(g^-1)) / 2."""
    inner: Quasimorphism

    @property
    def rank(self) -> int:
        return self.inner.rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        return self.inner.domain

    @property
    def claimed_defect(self) -> Optional[float]:
        return self.inner.claimed_defect

    def evaluate(self, g: FreeWord) -> float:
        return (self.inner.evaluate(g) - self.inner.evaluate(~g)) / 2

    def to_dict(self) -> Dict:
        return {"variant": "alternated", "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class Perturbed(Quasimorphism):
    """Alternation of ``inner`` forced to vanish near the given subgroups.

    h evaluates to 0 when h = u·k·v with k in one of ``vanishing`` and
    |u|, |v| ≤ ``margin``.
    """
    inner: Quasimorphism
    subgroup: StallingsGraph
    vanishing: Tuple[StallingsGraph, ...]
    margin: int

    @property
    def rank(self) -> int:
        return self.subgroup.rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        return self.subgroup

    def in_thickening(self, h: FreeWord) -> bool:
        if not self.vanishing:
            return False
        # u·1·v splits any word of length at most 2·margin
        if len(h) <= 2 * self.margin:
            return True
        # otherwise the coset uK has to share an edge with [1, h]
        for K in self.vanishing:
            depth = K.tree_paths()
            for i, v, j, w in K.maximal_runs(h):
                if i + len(depth[v]) <= self.margin and len(h) - j + len(depth[w]) <= self.margin:
                    return True
        return False

    def evaluate(self, g: FreeWord) -> float:
        self._check(g)
        if self.in_thickening(g):
            return 0.0
        return (self.inner.evaluate(g) - self.inner.evaluate(~g)) / 2

    def to_dict(self) -> Dict:
        return {
            "variant": "perturbed",
            "inner": self.inner.to_dict(),
            "subgroup": _subgroup_dict(self.subgroup),
            "vanishing": [_subgroup_dict(K) for K in self.vanishing],
            "margin": self.margin,
        }


@dataclass(frozen=True)
class Homogenized(Quasimorphism):
    """base(g^N) / N, or the exact limit for counting quasimorphisms when ``exact``."""
    base: Quasimorphism
    power_depth: int = DEFAULT_POWER_DEPTH
    exact: bool = False
    _memo: BoundedMemo = field(default_factory=BoundedMemo, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.power_depth < 1:
            raise QuasimorphismSpecError(f"power depth must be at least 1, got {self.power_depth}")
        if self.exact and not supports_cyclic_mode(self.base):
            raise QuasimorphismSpecError("exact homogenization needs a Brooks or homomorphism base")

    @property
    def rank(self) -> int:
        return self.base.rank

    @property
    def domain(self) -> Optional[StallingsGraph]:
        return self.base.domain

    def evaluate(self, g: FreeWord) -> float:
        self._check(g)
        cached = self._memo.get(g)
        if cached is not None:
            return cached
        if self.exact:
            value = cyclic_value(self.base, g)
        else:
            value = self.base.evaluate(g ** self.power_depth) / self.power_depth
        return self._memo.setdefault(g, value)

    def to_dict(self) -> Dict:
        return {"variant": "homogenized", "base": self.base.to_dict(),
                "N": self.power_depth, "exact": self.exact}


@dataclass(frozen=True)
class Trace:
    """Formal combination of subgroup elements; empty means zero."""
    terms: Tuple[Tuple[FreeWord, float], ...] = ()

    def is_zero(self) -> bool:
        return not self.terms

    def apply(self, q: Quasimorphism) -> float:
        """q extended linearly over the combination."""
        return float(sum(weight * q.evaluate(h) for h, weight in self.terms))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        if len(self.terms) == 1 and self.terms[0][1] == 1.0:
            return str(self.terms[0][0]) or "1"
        return " + ".join(f"{weight:g}*{h or '1'}" for h, weight in self.terms)

    def to_dict(self) -> Dict:
        return {"zero": self.is_zero(), "terms": [[str(h), w] for h, w in self.terms]}


ZERO_TRACE = Trace()


def _trace_from_projections(H: StallingsGraph, start: List[FreeWord], end: List[FreeWord],
                            D: int) -> Trace:
    if start == end:
        return ZERO_TRACE
    points = start + [p for p in end if p not in start]
    diameter = max(H.intrinsic_length(~y * z) for y in points for z in points)
    if diameter <= D:
        return ZERO_TRACE
    weight = 1.0 / (len(start) * len(end))
    combo: Dict[FreeWord, float] = {}
    for y in start:
        for z in end:
            h = ~y * z
            combo[h] = combo.get(h, 0.0) + weight
    return Trace(tuple(sorted(combo.items(), key=lambda item: item[0].sort_key())))


def trace(coset: CosetRef, x: FreeWord, D: int) -> Trace:
    """Trace of x on a coset: the closest-point projections of 1 and x compared.

    Zero when both projections agree or their union has intrinsic diameter
    at most D, else the average of y⁻¹z over y ∈ π(1), z ∈ π(x).
    """
    if D < 0:
        raise ValueError(f"trace threshold must be non-negative, got {D}")
    start, _ = nearest_points(FreeWord.identity(x.rank), coset)
    end, _ = nearest_points(x, coset)
    return _trace_from_projections(coset.subgroup, start, end, D)


def contributing_cosets(H: StallingsGraph, x: FreeWord, D: int) -> Dict[CosetRef, Trace]:
    """Cosets of H with nonzero trace at x, found by walking the geodesic [1, x].

    A coset can only contribute if its hull shares an edge with the
    geodesic. Each such hull meets [1, x] in one segment [x_i, x_j], which
    is a maximal run of letters of x readable in the core graph; the two
    projections are then x_i and x_j followed by geodesics to the basepoint.
    """
    found: Dict[CosetRef, Trace] = {}
    for i, v, j, w in H.maximal_runs(x):
        head, tail = x[:i], x[:j]
        start = sorted({head * FreeWord(H.rank, p) for p in geodesics_to_base(H, v)},
                       key=FreeWord.sort_key)
        end = sorted({tail * FreeWord(H.rank, p) for p in geodesics_to_base(H, w)},
                     key=FreeWord.sort_key)
        result = _trace_from_projections(H, start, end, D)
        if not result.is_zero():
            found[canonicalize(start[0], H)] = result
    return found


def brute_force_contributions(H: StallingsGraph, x: FreeWord, D: int) -> Dict[CosetRef, Trace]:
    """Nonzero traces over every coset with representative in ball(|x| + margin)."""
    radius = len(x) + H.quasiconvexity_constant()
    found: Dict[CosetRef, Trace] = {}
    seen = set()
    for g in ball(H.rank, radius):
        coset = canonicalize(g, H)
        if coset in seen:
            continue
        seen.add(coset)
        result = trace(coset, x, D)
        if not result.is_zero():
            found[coset] = result
    return found


@dataclass(frozen=True)
class ThetaExtended(Quasimorphism):
    """Sum over cosets gH of inner(trace of x on gH)."""
    subgroup: StallingsGraph
    inner: Quasimorphism
    threshold: int
    check_oracle: bool = False
    _memo: BoundedMemo = field(default_factory=BoundedMemo, compare=False, hash=False, repr=False)

    @property
    def rank(self) -> int:
        return self.subgroup.rank

    def contributions(self, x: FreeWord) -> Dict[CosetRef, Trace]:
        self._check(x)
        found = contributing_cosets(self.subgroup, x, self.threshold)
        if self.check_oracle:
            expected = brute_force_contributions(self.subgroup, x, self.threshold)
            if found != expected:
                missing = sorted(str(c) for c in set(expected) - set(found))
                extra = sorted(str(c) for c in set(found) - set(expected))
                raise OracleMismatchError(
                    f"contributing cosets at {x or '1'} disagree with brute force: "
                    f"missing {missing}, extra {extra}")
        return found

    def evaluate(self, g: FreeWord) -> float:
        cached = self._memo.get(g)
        if cached is not None:
            return cached
        found = self.contributions(g)
        value = 0.0
        for coset in sorted(found, key=CosetRef.sort_key):
            value += found[coset].apply(self.inner)
        return self._memo.setdefault(g, value)

    def to_dict(self) -> Dict:
        return {"variant": "theta", "subgroup": _subgroup_dict(self.subgroup),
                "inner": self.inner.to_dict(), "D": self.threshold}


# -- numerics -----------------------------------------------------------------

def supports_cyclic_mode(q: Quasimorphism) -> bool:
    """True when the exact homogenization by cyclic counting applies to q."""
    if isinstance(q, (Homomorphism, Brooks)):
        return True
    if isinstance(q, Sum):
        return all(supports_cyclic_mode(t) for t in q.terms)
    if isinstance(q, Scale):
        return supports_cyclic_mode(q.inner)
    return False


def cyclic_count(core: FreeWord, word: FreeWord) -> int:
    """Occurrences of ``word`` in the cyclic word ``core``, one per starting position."""
    n = len(core)
    if n == 0:
        return 0
    m = len(word)
    repeats = -(-m // n) + 1
    text = core.letters * repeats
    return sum(1 for i in range(n) if text[i:i + m] == word.letters)


def cyclic_value(q: Quasimorphism, g: FreeWord) -> float:
    """Homogenization of a counting quasimorphism read off the cyclic core of g."""
    if isinstance(q, Homomorphism):
        return q.evaluate(g)
    if isinstance(q, Brooks):
        q._check(g)
        core, _ = cyclic_reduce(g)
        total = 0.0
        for word, weight in q.terms:
            total += weight * (cyclic_count(core, word) - cyclic_count(core, ~word))
        return total
    if isinstance(q, Sum):
        return float(sum(cyclic_value(t, g) for t in q.terms))
    if isinstance(q, Scale):
        return q.coefficient * cyclic_value(q.inner, g)
    raise QuasimorphismSpecError(f"no cyclic mode for {type(q).__name__}")


def homogenize(q: Quasimorphism, x: FreeWord, N: int = DEFAULT_POWER_DEPTH, exact: bool = False) -> float:
    """q(x^N) / N, or the exact homogeneous value when ``exact`` and q is a counting quasimorphism."""
    if N < 1:
        raise ValueError(f"power depth must be at least 1, got {N}")
    if exact:
        return cyclic_value(q, x)
    return q.evaluate(x ** N) / N


@dataclass(frozen=True)
class DefectReport:
    value: float
    mode: str
    scale: int
    pairs: int
    worst: Tuple[str, str]

    def to_dict(self) -> Dict:
        return {"defect": self.value, "mode": self.mode, "L": self.scale,
                "pairs": self.pairs, "worst": list(self.worst)}


def _domain_words(q: Quasimorphism, L: int) -> List[FreeWord]:
    domain = q.domain
    if domain is not None:
        return list(domain.elements(L))
    return list(ball(q.rank, L))


def defect(q: Quasimorphism, L: int, sample_size: int = DEFAULT_DEFECT_SAMPLE, seed: int = 0,
           debug: bool = False) -> DefectReport:
    """Largest |q(xy) - q(x) - q(y)| over pairs from the ball of radius L.

    The full grid is used while it has at most EXHAUSTIVE_GRID_LIMIT pairs,
    otherwise ``sample_size`` pairs drawn with ``seed``.
    """
    if L < 1:
        raise ValueError(f"defect scale must be at least 1, got {L}")
    words = _domain_words(q, L)
    if len(words) ** 2 <= EXHAUSTIVE_GRID_LIMIT:
        mode = "exhaustive"
        pairs = [(x, y) for x in words for y in words]
    else:
        mode = "sampled"
        rng = random.Random(seed)
        pairs = [(rng.choice(words), rng.choice(words)) for _ in range(sample_size)]
    log_debug(f"defect at L={L}: {mode} over {len(pairs)} pair(s)", debug)

    values: Dict[FreeWord, float] = {}

    def value(g: FreeWord) -> float:
        if g not in values:
            values[g] = q.evaluate(g)
        return values[g]

    def gap(pair: Tuple[FreeWord, FreeWord]) -> float:
        x, y = pair
        return abs(value(x * y) - value(x) - value(y))

    gaps = parallel_map(gap, pairs)
    best, worst = 0.0, (FreeWord.identity(q.rank), FreeWord.identity(q.rank))
    for g, pair in zip(gaps, pairs):
        if g > best:
            best, worst = g, pair
    return DefectReport(best, mode, L, len(pairs), (str(worst[0]), str(worst[1])))


def alternate(q: Quasimorphism) -> Quasimorphism:
    if isinstance(q, Alternated):
        return q
    return Alternated(q)


def is_alternating(q: Quasimorphism, radius: int = 4, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """Alternating by construction, or q(g⁻¹) = -q(g) on the domain ball of the given radius."""
    if _alternating_by_construction(q):
        return True
    return all(abs(q.evaluate(g) + q.evaluate(~g)) <= tolerance for g in _domain_words(q, radius))


def _alternating_by_construction(q: Quasimorphism) -> bool:
    if isinstance(q, (Homomorphism, Brooks, Alternated, Perturbed, ThetaExtended)):
        return True
    if isinstance(q, Sum):
        return all(_alternating_by_construction(t) for t in q.terms)
    if isinstance(q, (Scale, Intrinsic)):
        return _alternating_by_construction(q.inner)
    if isinstance(q, Restriction):
        return _alternating_by_construction(q.ambient)
    if isinstance(q, Homogenized):
        return _alternating_by_construction(q.base)
    return False


def restriction_error(q: Quasimorphism, H: StallingsGraph, q_H: Quasimorphism, L: int) -> float:
    """max over h ∈ H ∩ ball(L) of |q(h) - q_H(h)|."""
    elements = list(H.elements(L))
    gaps = parallel_map(lambda h: abs(q.evaluate(h) - q_H.evaluate(h)), elements)
    return max(gaps, default=0.0)


# -- compatibility -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    first_index: int
    x: FreeWord
    second_index: int
    y: FreeWord
    conjugator: FreeWord
    first_value: float
    second_value: float

    def to_dict(self) -> Dict:
        return {
            "i": self.first_index,
            "x": str(self.x),
            "j": self.second_index,
            "y": str(self.y),
            "conjugator": str(self.conjugator),
            "q_i(x)": self.first_value,
            "q_j(y)": self.second_value,
        }


@dataclass(frozen=True)
class CompatibilityReport:
    compatible: bool
    violations: Tuple[Violation, ...]
    scale: int
    tolerance: float

    def to_dict(self) -> Dict:
        return {
            "compatible": self.compatible,
            "violations": [v.to_dict() for v in self.violations],
            "L": self.scale,
            "tolerance": self.tolerance,
        }


def cyclic_class_key(w: FreeWord) -> Tuple:
    """Shortlex-least rotation of the cyclic core; equal exactly for conjugate words."""
    core, _ = cyclic_reduce(w)
    return min((r.sort_key() for r in core.rotations()), default=core.sort_key())


def check_compatibility(pairs: Sequence[Tuple[StallingsGraph, Quasimorphism]], L: int = DEFAULT_SCALE,
                        tolerance: float = DEFAULT_TOLERANCE) -> CompatibilityReport:
    """Compare values on conjugate elements of the subgroups within ball(L).

    Each conjugacy class met is anchored at its first member in (subgroup
    index, shortlex) order; every member disagreeing with the anchor is a
    violation.
    """
    if L < 1:
        raise ValueError(f"compatibility scale must be at least 1, got {L}")
    members: List[Tuple[int, FreeWord]] = []
    for i, (H, _) in enumerate(pairs):
        members.extend((i, h) for h in H.elements(L) if not h.is_identity())
    values = parallel_map(lambda item: pairs[item[0]][1].evaluate(item[1]), members)

    classes: Dict[Tuple, List[int]] = {}
    for position, (_, h) in enumerate(members):
        classes.setdefault(cyclic_class_key(h), []).append(position)

    violations: List[Violation] = []
    for key in sorted(classes):
        anchor, *rest = classes[key]
        i, x = members[anchor]
        for position in rest:
            j, y = members[position]
            if abs(values[anchor] - values[position]) > tolerance:
                _, g = are_conjugate(x, y)
                violations.append(Violation(i, x, j, y, g, values[anchor], values[position]))
    return CompatibilityReport(not violations, tuple(violations), L, tolerance)


# -- extension -----------------------------------------------------------------

def _require_infinite(H: StallingsGraph) -> None:
    if H.is_trivial():
        raise QuasimorphismSpecError("extension needs an infinite subgroup")


def theta_extend(H: StallingsGraph, q: Quasimorphism, D: Optional[int] = None,
                 check_oracle: bool = False) -> ThetaExtended:
    """Extend a quasimorphism on H to F_n by summing over cosets of H.

    Non-alternating q is replaced by its alternation first.
    """
    _require_infinite(H)
    if q.rank != H.rank:
        raise RankMismatchError(q.rank, H.rank)
    if D is None:
        D = default_trace_threshold(H.max_generator_length())
    if D < 0:
        raise ValueError(f"trace threshold must be non-negative, got {D}")
    if not is_alternating(q):
        log_info(f"alternating the quasimorphism on {H} before extending")
        q = alternate(q)
    return ThetaExtended(H, q, D, check_oracle)


def psi_extend(H: StallingsGraph, q: Quasimorphism, D: Optional[int] = None,
               N: int = DEFAULT_POWER_DEPTH, check_oracle: bool = False) -> Homogenized:
    """Homogenization of ``theta_extend`` at power depth N."""
    if N < 1:
        raise ValueError(f"power depth must be at least 1, got {N}")
    return Homogenized(theta_extend(H, q, D, check_oracle), N)


def _extend(pairs: List[Tuple[StallingsGraph, Quasimorphism]], D: Optional[int], N: int,
            debug: bool) -> Quasimorphism:
    H1, q1 = pairs[0]
    if len(pairs) == 1:
        return psi_extend(H1, q1, D, N)
    rest = _extend(pairs[1:], D, N, debug)
    corrected = Sum((q1, Scale(-1.0, Restriction(rest, H1))))
    vanishing: List[StallingsGraph] = []
    for Hj, _ in pairs[1:]:
        reps, _ = conjugacy_class_reps(H1, Hj)
        for K, _ in reps:
            if K not in vanishing:
                vanishing.append(K)
    margin = 0
    if vanishing:
        margin = projection_gap(CosetRef(H1, FreeWord.identity(H1.rank)), PROJECTION_SAMPLE_RADIUS)
    log_debug(f"extending over {H1}: {len(vanishing)} intersection class(es), margin {margin}", debug)
    perturbed = Perturbed(corrected, H1, tuple(vanishing), margin)
    return Sum((psi_extend(H1, perturbed, D, N), rest))


def simultaneous_extend(pairs: Sequence[Tuple[StallingsGraph, Quasimorphism]], D: Optional[int] = None,
                        N: int = DEFAULT_POWER_DEPTH, L: int = DEFAULT_SCALE,
                        tolerance: float = DEFAULT_TOLERANCE, debug: bool = False) -> Quasimorphism:
    """One quasimorphism on F_n restricting to each q_i on H_i.

    Raises:
        IncompatibleFamilyError: when conjugate elements get different values at scale L
        NotMalnormalError: when some H_i is not malnormal
    """
    pairs = list(pairs)
    if not pairs:
        raise QuasimorphismSpecError("nothing to extend")
    report = check_compatibility(pairs, L, tolerance)
    if not report.compatible:
        raise IncompatibleFamilyError(report)
    for H, _ in pairs:
        _require_infinite(H)
        malnormal, witness = is_malnormal(H)
        if not malnormal:
            raise NotMalnormalError(str(H), str(witness))
    return _extend(pairs, D, N, debug)


def zero_on(H: StallingsGraph) -> Intrinsic:
    """The zero quasimorphism on H."""
    return Intrinsic(H, Homomorphism(H.subgroup_rank(), (0.0,) * H.subgroup_rank()))


def basis_counting(H: StallingsGraph, N: int = DEFAULT_POWER_DEPTH) -> Intrinsic:
    """Homogeneous counting quasimorphism on H: first basis letter plus the word x1·x2.

    Takes the value 1 on the first basis element and is not a homomorphism
    when H has rank at least 2.
    """
    rank = H.subgroup_rank()
    terms = [(FreeWord(rank, (1,)), 1.0)]
    if rank >= 2:
        terms.append((FreeWord(rank, (1, 2)), 1.0))
    return Intrinsic(H, Homogenized(Brooks(rank, tuple(terms)), N, exact=True))


def invisible_class_demo(Hs: Sequence[StallingsGraph], seed: int, word_length: int = DEMO_WORD_LENGTH,
                         D: int = DEMO_TRACE_THRESHOLD, N: int = DEFAULT_POWER_DEPTH,
                         L: int = DEFAULT_SCALE, tolerance: float = DEMO_TOLERANCE,
                         check_radius: int = RESTRICTION_CHECK_RADIUS, attempts: int = 20,
                         debug: bool = False
                         ) -> Tuple[StallingsGraph, Quasimorphism, Dict]:
    """A quasimorphism vanishing on every H_i but not on a freshly sampled H.

    Raises:
        InfiniteIndexRequiredError: when some H_i has finite index
        NotMalnormalError: when some H_i is not malnormal
        BudgetExceededError: when no sampled H is compatible with the family
    """
    rank = 2
    for Hi in Hs:
        if Hi.rank != rank:
            raise RankMismatchError(Hi.rank, rank)
        if Hi.index() != math.inf:
            raise InfiniteIndexRequiredError(f"{Hi} has finite index {Hi.index()}")
        malnormal, witness = is_malnormal(Hi)
        if not malnormal:
            raise NotMalnormalError(str(Hi), str(witness))

    for attempt in range(attempts):
        H = random_independent_subgroup(rank, word_length, seed + attempt)
        phi = basis_counting(H, N)
        pairs = [(H, phi)] + [(Hi, zero_on(Hi)) for Hi in Hs]
        if check_compatibility(pairs, L, tolerance).compatible:
            break
        log_debug(f"sample {attempt} conjugates into the family, resampling", debug)
    else:
        raise BudgetExceededError(f"no compatible subgroup after {attempts} samples", attempts)

    q = simultaneous_extend(pairs, D, N, L, tolerance, debug)
    witness = H.generators()[0]
    value = q.evaluate(witness)
    errors = {str(Hi): restriction_error(q, Hi, zero_on(Hi), check_radius) for Hi in Hs}
    report = {
        "subgroup": [str(g) for g in H.generators()],
        "sample": attempt,
        "witness": str(witness),
        "witness_value": value,
        "nontrivial": abs(value) >= 0.5,
        "restriction_errors": errors,
        "vanishes": all(e <= tolerance for e in errors.values()),
    }
    return H, q, report
