"""Coset geometry in the Cayley tree of F_n.

The convex hull of a coset gH is the translate by g of the lift of the core
graph: a point g·p lies on it exactly when p is readable from the basepoint.
Distances to the coset decompose as distance to the hull plus the graph
distance from the entrance vertex to the basepoint.
"""

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .errors import NotPairwiseCloseError, RankMismatchError
from .stallings import StallingsGraph, intersect
from .utils import log_debug, parallel_map
from .words import FreeWord, ball, distance, letters_in_order


@dataclass(frozen=True)
class CosetRef:
    """Left coset rep·H with rep the shortlex-least element."""
    subgroup: StallingsGraph
    rep: FreeWord

    def __str__(self) -> str:
        return f"{self.rep or '1'}{self.subgroup}"

    def sort_key(self):
        return (self.rep.sort_key(), sorted(self.subgroup.edges))

    def to_dict(self) -> Dict:
        return {
            "rep": str(self.rep),
            "subgroup": [str(g) for g in self.subgroup.generators()],
        }


def _graph_distances(H: StallingsGraph) -> List[int]:
    """Graph distance of every vertex to the basepoint."""
    return [len(p) for p in H.tree_paths()]


def geodesics_to_base(H: StallingsGraph, vertex: int) -> List[Tuple[int, ...]]:
    """Every shortest path from ``vertex`` to the basepoint, as letter tuples."""
    dist = _graph_distances(H)
    alphabet = letters_in_order(H.rank)
    paths: List[Tuple[int, ...]] = []
    stack = [(vertex, ())]
    while stack:
        v, letters = stack.pop()
        if v == H.basepoint:
            paths.append(letters)
            continue
        for letter in alphabet:
            w = H.step(v, letter)
            if w is not None and dist[w] == dist[v] - 1:
                stack.append((w, letters + (letter,)))
    return paths


def _check_rank(x: FreeWord, H: StallingsGraph) -> None:
    if x.rank != H.rank:
        raise RankMismatchError(x.rank, H.rank)


def hull_projection(x: FreeWord, coset: CosetRef) -> Tuple[FreeWord, int, int]:
    """Closest point of the coset's hull to ``x``.

    Returns:
        (point on the hull, core-graph vertex under it, distance from x to the hull)
    """
    _check_rank(x, coset.subgroup)
    y = ~coset.rep * x
    vertex, read = coset.subgroup.read_prefix(y)
    return coset.rep * y[:read], vertex, len(y) - read


def in_hull(x: FreeWord, coset: CosetRef) -> bool:
    return hull_projection(x, coset)[2] == 0


def nearest_points(x: FreeWord, coset: CosetRef) -> Tuple[List[FreeWord], int]:
    """All coset elements at minimal distance from ``x``, shortlex sorted."""
    H = coset.subgroup
    point, vertex, off = hull_projection(x, coset)
    dist = _graph_distances(H)[vertex]
    found = {point * FreeWord(H.rank, path) for path in geodesics_to_base(H, vertex)}
    return sorted(found, key=FreeWord.sort_key), off + dist


def nearest_point(x: FreeWord, coset: CosetRef) -> Tuple[FreeWord, int]:
    """Closest element of the coset to ``x`` with shortlex tie-breaking."""
    points, dist = nearest_points(x, coset)
    return points[0], dist


def distance_to_coset(x: FreeWord, coset: CosetRef) -> int:
    """d(x, gH) without building the witness."""
    _, vertex, off = hull_projection(x, coset)
    return off + _graph_distances(coset.subgroup)[vertex]


def canonicalize(g: FreeWord, H: StallingsGraph) -> CosetRef:
    """Coset g·H with its shortlex-least representative."""
    _check_rank(g, H)
    rep, _ = nearest_point(FreeWord.identity(H.rank), CosetRef(H, g))
    assert H.contains(~g * rep)
    return CosetRef(H, rep)


def coset_distance(first: CosetRef, second: CosetRef) -> Tuple[int, Tuple[FreeWord, FreeWord]]:
    """Minimal tree distance between two cosets and a witnessing pair.

    If the hulls are disjoint the minimum runs through their bridge. Otherwise
    every geodesic between the cosets crosses the hull intersection, so the
    search runs over pullback states reachable inside it.
    """
    if first.subgroup.rank != second.subgroup.rank:
        raise RankMismatchError(first.subgroup.rank, second.subgroup.rank)
    q1, _, _ = hull_projection(second.rep, first)
    q2, _, gap = hull_projection(q1, second)
    if gap > 0:
        p1, r1 = nearest_point(q1, first)
        p2, r2 = nearest_point(q2, second)
        return r1 + gap + r2, (p1, p2)

    # hulls meet at q1; explore pullback states of the intersection
    H1, H2 = first.subgroup, second.subgroup
    d1, d2 = _graph_distances(H1), _graph_distances(H2)
    start = (H1.read(~first.rep * q1), H2.read(~second.rep * q1))
    seen = {start: q1}
    queue = deque([start])
    alphabet = letters_in_order(H1.rank)
    while queue:
        state = queue.popleft()
        z = seen[state]
        for letter in alphabet:
            w1, w2 = H1.step(state[0], letter), H2.step(state[1], letter)
            if w1 is None or w2 is None or (w1, w2) in seen:
                continue
            seen[(w1, w2)] = z * FreeWord(H1.rank, (letter,))
            queue.append((w1, w2))
    best_value = min(d1[a] + d2[b] for a, b in seen)
    candidates = []
    for (a, b), z in seen.items():
        if d1[a] + d2[b] == best_value:
            candidates.append((nearest_point(z, first)[0], nearest_point(z, second)[0]))
    pair = min(candidates, key=lambda p: (p[0].sort_key(), p[1].sort_key()))
    assert distance(*pair) == best_value
    return best_value, pair


def coarse_intersection(H1: StallingsGraph, H2: StallingsGraph, R: int, L: int) -> List[FreeWord]:
    """Elements h of H1 with |h| ≤ L and d(h, H2) ≤ R, shortlex sorted."""
    target = CosetRef(H2, FreeWord.identity(H2.rank))
    return [h for h in H1.elements(L) if distance_to_coset(h, target) <= R]


def hausdorff_gap(H1: StallingsGraph, H2: StallingsGraph, R: int, L: int) -> int:
    """Largest distance from the coarse intersection at scale L to H1 ∩ H2."""
    K = CosetRef(intersect(H1, H2), FreeWord.identity(H1.rank))
    return max(distance_to_coset(h, K) for h in coarse_intersection(H1, H2, R, L))


def check_pairwise_close(cosets: Sequence[CosetRef], D: int) -> None:
    """Raise NotPairwiseCloseError on the first pair more than D apart."""
    for first, second in combinations(cosets, 2):
        dist, _ = coset_distance(first, second)
        if dist > D:
            raise NotPairwiseCloseError(first, second, dist, D)


def _radius(x: FreeWord, cosets: Sequence[CosetRef]) -> int:
    return max(distance_to_coset(x, c) for c in cosets)


def _subtree_lower_bound(x: FreeWord, cosets: Sequence[CosetRef]) -> int:
    """Lower bound of the radius over every extension of ``x``.

    A coset with no element below x is reached from there only through x.
    """
    bound = 0
    for coset in cosets:
        point, _, off = hull_projection(x, coset)
        below = off == 0 or (len(point) > len(x) and point.letters[:len(x)] == x.letters)
        if not below:
            bound = max(bound, distance_to_coset(x, coset))
    return bound


def default_barycenter_scale(cosets: Sequence[CosetRef], D: int) -> int:
    return max(len(c.rep) for c in cosets) + 2 * D + max(
        c.subgroup.quasiconvexity_constant() for c in cosets)


def coarse_barycenter(cosets: Sequence[CosetRef], D: int, L: Optional[int] = None,
                      debug: bool = False) -> Tuple[FreeWord, int, int]:
    """1-center of a pairwise D-close family over ball(L), by branch and bound.

    Returns:
        (center, radius, L); ties resolved by shortlex

    Raises:
        NotPairwiseCloseError: with the first violating pair
    """
    if not cosets:
        raise ValueError("coset family must be nonempty")
    check_pairwise_close(cosets, D)
    if L is None:
        L = default_barycenter_scale(cosets, D)
    rank = cosets[0].subgroup.rank
    alphabet = letters_in_order(rank)
    best_x = FreeWord.identity(rank)
    best_r = _radius(best_x, cosets)
    level = [best_x]
    visited = 1
    for length in range(L):
        nxt = []
        for x in level:
            if _subtree_lower_bound(x, cosets) >= best_r:
                continue
            last = x.letters[-1] if x.letters else 0
            for letter in alphabet:
                if letter != -last:
                    nxt.append(FreeWord(rank, x.letters + (letter,)))
        for x in nxt:
            visited += 1
            r = _radius(x, cosets)
            if r < best_r:
                best_x, best_r = x, r
        level = nxt
        if not level:
            break
    log_debug(f"barycenter search visited {visited} point(s) up to length {L}", debug)
    return best_x, best_r, L


def brute_force_center(cosets: Sequence[CosetRef], radius: int) -> Tuple[FreeWord, int]:
    """Exhaustive 1-center over ball(radius)."""
    rank = cosets[0].subgroup.rank
    best = None
    for x in ball(rank, radius):
        r = _radius(x, cosets)
        if best is None or r < best[1]:
            best = (x, r)
    return best


def enumerate_cosets(H: StallingsGraph, search_len: int) -> List[CosetRef]:
    """Distinct cosets gH with |g| ≤ search_len, sorted by representative."""
    found = {canonicalize(g, H) for g in ball(H.rank, search_len)}
    return sorted(found, key=CosetRef.sort_key)


def _max_close_family(cosets: List[CosetRef], D: int) -> List[CosetRef]:
    graph = nx.Graph()
    graph.add_nodes_from(range(len(cosets)))
    pairs = list(combinations(range(len(cosets)), 2))
    dists = parallel_map(lambda p: coset_distance(cosets[p[0]], cosets[p[1]])[0], pairs)
    graph.add_edges_from(p for p, d in zip(pairs, dists) if d <= D)
    best: List[int] = []
    for clique in nx.find_cliques(graph):
        clique = sorted(clique)
        if len(clique) > len(best) or (len(clique) == len(best) and clique < best):
            best = clique
    return [cosets[i] for i in best]


def packing_experiment(H: StallingsGraph, D: int, search_len: int) -> Tuple[List[CosetRef], int]:
    """Largest family of distinct pairwise D-close cosets with short representatives."""
    family = _max_close_family(enumerate_cosets(H, search_len), D)
    return family, len(family)


def family_packing(Hs: Sequence[StallingsGraph], D: int, search_len: int) -> Tuple[List[CosetRef], int]:
    """Packing experiment over cosets of several subgroups at once."""
    cosets: List[CosetRef] = []
    seen = set()
    for H in Hs:
        for coset in enumerate_cosets(H, search_len):
            if coset not in seen:
                seen.add(coset)
                cosets.append(coset)
    family = _max_close_family(cosets, D)
    return family, len(family)


def entrance_projection(x: FreeWord, coset: CosetRef) -> List[FreeWord]:
    """Coset elements within the quasiconvexity margin of x's entrance point into the hull."""
    H = coset.subgroup
    point, vertex, _ = hull_projection(x, coset)
    margin = H.quasiconvexity_constant()
    found = {point * u for u in H.elements(margin, start=vertex)}
    return sorted(found, key=FreeWord.sort_key)


def _hausdorff(first: Iterable[FreeWord], second: Iterable[FreeWord]) -> int:
    first, second = list(first), list(second)
    forward = max(min(distance(a, b) for b in second) for a in first)
    backward = max(min(distance(a, b) for a in first) for b in second)
    return max(forward, backward)


def projection_gap(coset: CosetRef, radius: int) -> int:
    """Largest Hausdorff distance between entrance and closest-point projections on ball(radius)."""
    def gap(x: FreeWord) -> int:
        return _hausdorff(entrance_projection(x, coset), nearest_points(x, coset)[0])
    return max(parallel_map(gap, ball(coset.subgroup.rank, radius)))


def double_coset_finiteness(H1: StallingsGraph, H2: StallingsGraph, R: int, C: int, L: int
                            ) -> List[FreeWord]:
    """Words s with |s| ≤ R whose coarse overlap H1 ∩ N_R(sH2) has diameter ≥ C within ball(L)."""
    elements = list(H1.elements(L))
    result = []
    for s in ball(H1.rank, R):
        coset = CosetRef(H2, s)
        close = [h for h in elements if distance_to_coset(h, coset) <= R]
        diam = max((distance(a, b) for a, b in combinations(close, 2)), default=0)
        if close and diam >= C:
            result.append(s)
    return result
