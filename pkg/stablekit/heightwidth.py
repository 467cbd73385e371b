"""Height and width of subgroups and finite families, with certificates.

Conjugates are indexed by left cosets: gH stands for g·H·g⁻¹. Every
certificate re-verifies by membership tests alone.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import RankMismatchError
from .stallings import StallingsGraph, conjugacy_key, double_coset_scan, intersect
from .treegeo import CosetRef, canonicalize, in_hull
from .utils import log_debug, parallel_map
from .words import FreeWord, ball, cyclic_reduce


@dataclass
class HeightCertificate:
    """n essentially distinct conjugates sharing the witness element."""
    n: int
    cosets: List[CosetRef]
    witness: Optional[FreeWord]
    exhaustion_bound: Union[int, str]
    exact: bool
    budget_exceeded: bool = False

    def verify(self) -> bool:
        if len(set(self.cosets)) != len(self.cosets) or len(self.cosets) != self.n:
            return False
        if self.n == 0:
            return self.witness is None
        w = self.witness
        if w is None or w.is_identity() or not w.is_cyclically_reduced():
            return False
        return all(c.subgroup.contains(~c.rep * w * c.rep) for c in self.cosets)

    def to_dict(self) -> Dict:
        return {
            "height": self.n,
            "cosets": [c.to_dict() for c in self.cosets],
            "witness": None if self.witness is None else str(self.witness),
            "exhaustionBound": self.exhaustion_bound,
            "exact": self.exact,
            "budgetExceeded": self.budget_exceeded,
        }


@dataclass
class WidthCertificate:
    """m distinct cosets whose conjugates pairwise intersect infinitely."""
    m: int
    cosets: List[CosetRef]
    pair_witnesses: Dict[Tuple[int, int], FreeWord] = field(default_factory=dict)
    search_radius: int = 0
    exact: bool = False
    budget_exceeded: bool = False

    def verify(self) -> bool:
        if len(set(self.cosets)) != len(self.cosets) or len(self.cosets) != self.m:
            return False
        for i, j in combinations(range(self.m), 2):
            w = self.pair_witnesses.get((i, j))
            if w is None or w.is_identity():
                return False
            for c in (self.cosets[i], self.cosets[j]):
                if not c.subgroup.contains(~c.rep * w * c.rep):
                    return False
        return True

    def to_dict(self) -> Dict:
        return {
            "width": self.m,
            "cosets": [c.to_dict() for c in self.cosets],
            "pairWitnesses": {f"{i},{j}": str(w) for (i, j), w in sorted(self.pair_witnesses.items())},
            "searchRadius": self.search_radius,
            "exact": self.exact,
            "budgetExceeded": self.budget_exceeded,
        }


def conjugate_of(coset: CosetRef) -> StallingsGraph:
    """Graph of rep·H·rep⁻¹."""
    return coset.subgroup.conjugate(coset.rep)


# -- height: descent through intersections -----------------------------------

def _containing_cosets(K: StallingsGraph, Hs: Sequence[StallingsGraph]
                       ) -> Tuple[List[CosetRef], List[StallingsGraph]]:
    """Cosets gH (H in the family) whose conjugates contain K, and proper infinite sub-intersections."""
    cosets = []
    children = []
    for H in Hs:
        for rep in double_coset_scan(K, H):
            if not rep.infinite:
                continue
            if rep.intersection == K:
                cosets.append(canonicalize(rep.conjugator, H))
            else:
                children.append(rep.intersection)
    return sorted(set(cosets), key=CosetRef.sort_key), children


@dataclass
class _Descent:
    classes: Dict[Tuple, Tuple[StallingsGraph, List[CosetRef]]]
    budget_exceeded: bool
    steps: int


def _descend(Hs: Sequence[StallingsGraph], depth: int, debug: bool = False) -> _Descent:
    """Walk infinite intersections of conjugates, one node per conjugacy class."""
    classes: Dict[Tuple, Tuple[StallingsGraph, List[CosetRef]]] = {}
    frontier = []
    for H in Hs:
        key = conjugacy_key(H)
        if key is not None and key not in classes:
            frontier.append((key, H))
            classes[key] = (H, [])
    budget_exceeded = False
    steps = 0
    while frontier:
        if steps >= depth:
            budget_exceeded = True
            break
        steps += 1
        results = parallel_map(lambda item: _containing_cosets(item[1], Hs), frontier)
        nxt = []
        for (key, K), (cosets, children) in zip(frontier, results):
            classes[key] = (K, cosets)
            for child in children:
                child_key = conjugacy_key(child)
                if child_key not in classes:
                    classes[child_key] = (child, [])
                    nxt.append((child_key, child))
        log_debug(f"descent step {steps}: {len(frontier)} class(es), {len(nxt)} new", debug)
        frontier = sorted(nxt, key=lambda item: item[0])
    # classes still in the frontier have no coset list yet
    pending = {key for key, _ in frontier}
    done = {k: v for k, v in classes.items() if k not in pending}
    return _Descent(done, budget_exceeded, steps)


def _height_certificate(descent: _Descent, depth: int) -> HeightCertificate:
    best_key = None
    for key in sorted(descent.classes):
        if best_key is None or len(descent.classes[key][1]) > len(descent.classes[best_key][1]):
            best_key = key
    exact = not descent.budget_exceeded
    bound: Union[int, str] = "proved" if exact else depth
    if best_key is None:
        return HeightCertificate(0, [], None, bound, exact, descent.budget_exceeded)
    K, cosets = descent.classes[best_key]
    core, c = cyclic_reduce(K.generators()[0])
    moved = sorted({canonicalize(~c * coset.rep, coset.subgroup) for coset in cosets}, key=CosetRef.sort_key)
    return HeightCertificate(len(moved), moved, core, bound, exact, descent.budget_exceeded)


def height(H: StallingsGraph, depth: int, debug: bool = False) -> HeightCertificate:
    """Largest number of essentially distinct conjugates of H with infinite intersection."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    return _height_certificate(_descend([H], depth, debug), depth)


def intersection_classes(Hs: Sequence[StallingsGraph], depth: int) -> List[StallingsGraph]:
    """Representatives of the conjugacy classes of infinite intersections of conjugates."""
    descent = _descend(Hs, depth)
    return [descent.classes[key][0] for key in sorted(descent.classes)]


# -- width: cliques among cosets whose hulls pass through the identity ----------

def _hull_candidates(Hs: Sequence[StallingsGraph], radius: int) -> List[CosetRef]:
    """Cosets of infinite family members with rep length ≤ radius and hull through 1."""
    found = set()
    for H in Hs:
        if not H.has_cycle():
            continue
        for g in ball(H.rank, radius):
            coset = canonicalize(g, H)
            if in_hull(FreeWord.identity(H.rank), coset):
                found.add(coset)
    return sorted(found, key=CosetRef.sort_key)


def _pair_witness(first: CosetRef, second: CosetRef) -> Optional[FreeWord]:
    inter = intersect(conjugate_of(first), conjugate_of(second))
    if not inter.has_cycle():
        return None
    return inter.generators()[0]


def _max_clique(count: int, adjacent: Dict[Tuple[int, int], FreeWord]) -> List[int]:
    graph = nx.Graph()
    graph.add_nodes_from(range(count))
    graph.add_edges_from(adjacent)
    best: List[int] = []
    for clique in nx.find_cliques(graph):
        clique = sorted(clique)
        if len(clique) > len(best) or (len(clique) == len(best) and clique < best):
            best = clique
    return best


def _width_over(Hs: Sequence[StallingsGraph], radius: int) -> WidthCertificate:
    cosets = _hull_candidates(Hs, radius)
    pairs = list(combinations(range(len(cosets)), 2))
    witnesses = parallel_map(lambda p: _pair_witness(cosets[p[0]], cosets[p[1]]), pairs)
    adjacent = {p: w for p, w in zip(pairs, witnesses) if w is not None}
    clique = _max_clique(len(cosets), adjacent)
    chosen = [cosets[i] for i in clique]
    pair_witnesses = {}
    for a, b in combinations(range(len(clique)), 2):
        pair_witnesses[(a, b)] = adjacent[(clique[a], clique[b])]
    return WidthCertificate(len(chosen), chosen, pair_witnesses, radius)


def _width(Hs: Sequence[StallingsGraph], depth: int, debug: bool = False) -> WidthCertificate:
    if depth < 1:
        raise ValueError("depth must be at least 1")
    certificate = _width_over(Hs, depth)
    # every coset whose hull contains 1 has a representative within the margin
    margin = max(H.quasiconvexity_constant() for H in Hs)
    closed = depth >= margin or _hull_candidates(Hs, depth) == _hull_candidates(Hs, depth + 1)
    certificate.exact = closed
    certificate.budget_exceeded = not closed
    log_debug(f"width search radius {depth}: {len(certificate.cosets)} coset(s), exact={closed}", debug)
    return certificate


def width(H: StallingsGraph, depth: int, debug: bool = False) -> WidthCertificate:
    """Largest family of distinct cosets of H whose conjugates pairwise intersect infinitely.

    Pairwise infinite intersections force the hulls to meet pairwise, hence in
    a common point; translating that point to 1 leaves a finite candidate set.
    """
    return _width([H], depth, debug)


def family_height_width(Hs: Sequence[StallingsGraph], depth: int, debug: bool = False
                        ) -> Tuple[HeightCertificate, WidthCertificate]:
    """Height and width of a finite family; distinctness is distinctness of cosets."""
    if not Hs:
        raise ValueError("family must be nonempty")
    ranks = {H.rank for H in Hs}
    if len(ranks) != 1:
        first, second = sorted(ranks)[:2]
        raise RankMismatchError(first, second)
    return _height_certificate(_descend(Hs, depth, debug), depth), _width(Hs, depth, debug)


# -- exhaustive oracle ------------------------------------------------------------

def brute_force_oracle(Hs: Union[StallingsGraph, Sequence[StallingsGraph]], conj_len: int = 4,
                       tuple_size: int = 4) -> Tuple[HeightCertificate, WidthCertificate]:
    """Exhaustive search over cosets with representatives in ball(conj_len).

    Height and width are capped at ``tuple_size``.
    """
    if isinstance(Hs, StallingsGraph):
        Hs = [Hs]
    cosets = []
    seen = set()
    for H in Hs:
        if not H.has_cycle():
            continue
        for g in ball(H.rank, conj_len):
            coset = canonicalize(g, H)
            if coset not in seen:
                seen.add(coset)
                cosets.append(coset)
    cosets.sort(key=CosetRef.sort_key)
    conjugates = [conjugate_of(c) for c in cosets]
    adjacent: Dict[Tuple[int, int], FreeWord] = {}
    for i, j in combinations(range(len(cosets)), 2):
        inter = intersect(conjugates[i], conjugates[j])
        if inter.has_cycle():
            adjacent[(i, j)] = inter.generators()[0]

    best_height: Tuple[List[int], Optional[StallingsGraph]] = ([], None)
    best_width: List[int] = []

    def extend(chosen: List[int], common: Optional[StallingsGraph], pairwise_only: bool) -> None:
        nonlocal best_height, best_width
        if pairwise_only:
            if len(chosen) > len(best_width):
                best_width = list(chosen)
        elif len(chosen) > len(best_height[0]):
            best_height = (list(chosen), common)
        if len(chosen) >= tuple_size:
            return
        start = chosen[-1] + 1 if chosen else 0
        for k in range(start, len(cosets)):
            if any((i, k) not in adjacent for i in chosen):
                continue
            if pairwise_only:
                extend(chosen + [k], None, True)
            else:
                nxt = conjugates[k] if common is None else intersect(common, conjugates[k])
                if nxt.has_cycle():
                    extend(chosen + [k], nxt, False)

    extend([], None, False)
    extend([], None, True)

    chosen, common = best_height
    if common is None:
        height_cert = HeightCertificate(0, [], None, conj_len, False)
    else:
        core, c = cyclic_reduce(common.generators()[0])
        moved = [canonicalize(~c * cosets[i].rep, cosets[i].subgroup) for i in chosen]
        height_cert = HeightCertificate(len(moved), sorted(moved, key=CosetRef.sort_key), core, conj_len, False)
    pair_witnesses = {(a, b): adjacent[(best_width[a], best_width[b])]
                      for a, b in combinations(range(len(best_width)), 2)}
    width_cert = WidthCertificate(len(best_width), [cosets[i] for i in best_width], pair_witnesses, conj_len)
    return height_cert, width_cert


def near_conjugate_packing(H: StallingsGraph, x: FreeWord, L: int) -> Dict:
    """Check the bijection hxH ↔ hK, K = H ∩ xHx⁻¹, over h ∈ H ∩ ball(L)."""
    K = intersect(H, H.conjugate(x))
    via_x = set()
    via_k = set()
    for h in H.elements(L):
        via_x.add(canonicalize(h * x, H))
        via_k.add(canonicalize(h, K))
    return {
        "x": str(x),
        "intersectionRank": K.subgroup_rank(),
        "intersection": [str(g) for g in K.generators()],
        "cosetsOfH": len(via_x),
        "cosetsOfK": len(via_k),
        "bijective": len(via_x) == len(via_k),
        "scaleL": L,
    }
