"""Folded core graphs of finitely generated subgroups of F_n.

Graphs are canonical: after folding and core pruning the vertices are
relabelled in breadth-first order from the basepoint, visiting neighbours in
letter order. Two graphs compare equal exactly when they describe the same
subgroup.
"""

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .config import DEFAULT_SAMPLER_RETRIES
from .errors import BudgetExceededError, RankMismatchError
from .utils import cached_result, log_debug, log_warning
from .words import FreeWord, letters_in_order, random_word

Edge = Tuple[int, int, int]


class _Folder:
    """Union-find folding of a labelled graph with pending merges."""

    def __init__(self, vertex_count: int):
        self.parent = list(range(vertex_count))
        self.adj: List[Dict[int, int]] = [dict() for _ in range(vertex_count)]
        self.pending: List[Tuple[int, int]] = []

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def _attach(self, u: int, label: int, w: int) -> None:
        existing = self.adj[u].get(label)
        if existing is None:
            self.adj[u][label] = w
        elif self.find(existing) != w:
            self.pending.append((existing, w))

    def add_edge(self, u: int, label: int, w: int) -> None:
        u, w = self.find(u), self.find(w)
        self._attach(u, label, w)
        self._attach(w, -label, u)
        self.drain()

    def drain(self) -> None:
        while self.pending:
            x, y = self.pending.pop()
            x, y = self.find(x), self.find(y)
            if x == y:
                continue
            # the smaller id survives, so the basepoint 0 is never absorbed
            if y < x:
                x, y = y, x
            self.parent[y] = x
            moved = self.adj[y]
            self.adj[y] = {}
            for label, target in moved.items():
                target = self.find(target)
                self._attach(x, label, target)
                self._attach(target, -label, x)

    def edges(self) -> Set[Edge]:
        result = set()
        for v in range(len(self.parent)):
            if self.find(v) != v:
                continue
            for label, target in self.adj[v].items():
                if label > 0:
                    result.add((v, label, self.find(target)))
        return result


def _prune(vertices: Iterable, edges: Sequence[Tuple], keep=None) -> Tuple[Set, List[Tuple]]:
    """Remove vertices of degree ≤ 1 repeatedly, except ``keep``.

    Edges are (src, label, dst) triples; a loop counts twice toward degree.
    """
    alive = set(vertices)
    degree = {v: 0 for v in alive}
    incident: Dict = {v: [] for v in alive}
    for index, (src, _, dst) in enumerate(edges):
        degree[src] += 1
        degree[dst] += 1
        incident[src].append(index)
        if dst != src:
            incident[dst].append(index)
    removed_edges: Set[int] = set()
    queue = deque(v for v in alive if degree[v] <= 1 and v != keep)
    while queue:
        v = queue.popleft()
        if v not in alive:
            continue
        alive.discard(v)
        for index in incident[v]:
            if index in removed_edges:
                continue
            removed_edges.add(index)
            src, _, dst = edges[index]
            other = dst if src == v else src
            degree[other] -= 1
            if other in alive and other != keep and degree[other] <= 1:
                queue.append(other)
    kept = [e for i, e in enumerate(edges) if i not in removed_edges]
    return alive, kept


def _canonical_form(rank: int, vertices: Set, edges: List[Tuple], basepoint) -> Tuple[int, frozenset]:
    """Relabel vertices 0..V-1 by ordered BFS from the basepoint."""
    adj: Dict = {v: {} for v in vertices}
    for src, label, dst in edges:
        adj[src][label] = dst
        adj[dst][-label] = src
    order = {basepoint: 0}
    queue = deque([basepoint])
    alphabet = letters_in_order(rank)
    while queue:
        v = queue.popleft()
        for letter in alphabet:
            w = adj[v].get(letter)
            if w is not None and w not in order:
                order[w] = len(order)
                queue.append(w)
    relabelled = frozenset((order[s], label, order[d]) for s, label, d in edges if s in order)
    return len(order), relabelled


def _fold_and_canonicalize(rank: int, vertex_count: int, edges: Iterable[Edge], basepoint: int = 0
                           ) -> Tuple[int, frozenset]:
    folder = _Folder(vertex_count)
    for src, label, dst in edges:
        folder.add_edge(src, label, dst)
    base = folder.find(basepoint)
    folded = sorted(folder.edges())
    roots = {v for v in range(len(folder.parent)) if folder.find(v) == v}
    # only the basepoint component matters
    reach = {base}
    stack = [base]
    while stack:
        v = stack.pop()
        for target in folder.adj[v].values():
            target = folder.find(target)
            if target not in reach:
                reach.add(target)
                stack.append(target)
    roots &= reach
    folded = [e for e in folded if e[0] in reach]
    alive, kept = _prune(roots, folded, keep=base)
    return _canonical_form(rank, alive, kept, base)


class StallingsGraph:
    """Folded core graph of a subgroup of F_rank based at vertex 0."""

    __slots__ = ("rank", "vertex_count", "edges", "basepoint", "_out", "_paths", "_hash")

    def __init__(self, rank: int, vertex_count: int, edges: frozenset):
        self.rank = rank
        self.vertex_count = vertex_count
        self.edges = edges
        self.basepoint = 0
        self._out: List[Dict[int, int]] = [dict() for _ in range(vertex_count)]
        for src, label, dst in edges:
            self._out[src][label] = dst
            self._out[dst][-label] = src
        self._paths: Optional[List[FreeWord]] = None
        self._hash = hash((rank, vertex_count, edges))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_generators(cls, rank: int, gens: Iterable[FreeWord]) -> "StallingsGraph":
        """Fold the bouquet of generator petals.

        Raises:
            RankMismatchError: when a generator lives in another rank
        """
        edges: List[Edge] = []
        vertex_count = 1
        for gen in gens:
            if gen.rank != rank:
                raise RankMismatchError(rank, gen.rank)
            if gen.is_identity():
                continue
            previous = 0
            for position, letter in enumerate(gen.letters):
                if position == len(gen) - 1:
                    target = 0
                else:
                    target = vertex_count
                    vertex_count += 1
                if letter > 0:
                    edges.append((previous, letter, target))
                else:
                    edges.append((target, -letter, previous))
                previous = target
        count, canonical = _fold_and_canonicalize(rank, vertex_count, edges)
        return cls(rank, count, canonical)

    @classmethod
    def from_edges(cls, rank: int, vertex_count: int, edges: Iterable[Edge], basepoint: int = 0
                   ) -> "StallingsGraph":
        """Build from an arbitrary labelled graph, folding and pruning as needed."""
        edges = list(edges)
        for src, label, dst in edges:
            if not 1 <= label <= rank:
                raise ValueError(f"edge label {label} out of range for rank {rank}")
            if not (0 <= src < vertex_count and 0 <= dst < vertex_count):
                raise ValueError(f"edge ({src}, {label}, {dst}) references a missing vertex")
        count, canonical = _fold_and_canonicalize(rank, vertex_count, edges, basepoint)
        return cls(rank, count, canonical)

    @classmethod
    def trivial(cls, rank: int) -> "StallingsGraph":
        return cls(rank, 1, frozenset())

    @classmethod
    def whole_group(cls, rank: int) -> "StallingsGraph":
        return cls(rank, 1, frozenset((0, i, 0) for i in range(1, rank + 1)))

    # -- value semantics --------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, StallingsGraph):
            return NotImplemented
        return (self.rank, self.vertex_count, self.edges) == (other.rank, other.vertex_count, other.edges)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"StallingsGraph(rank={self.rank}, V={self.vertex_count}, E={tuple(sorted(self.edges))})"

    def __str__(self) -> str:
        gens = ", ".join(str(g) for g in self.generators())
        return f"<{gens}>"

    def to_dict(self) -> Dict:
        """Adjacency export: {rank, vertices, basepoint, edges: [[src, label, dst]]}."""
        return {
            "rank": self.rank,
            "vertices": self.vertex_count,
            "basepoint": self.basepoint,
            "edges": [list(e) for e in sorted(self.edges)],
        }

    # -- reading words ----------------------------------------------------

    def step(self, vertex: int, letter: int) -> Optional[int]:
        return self._out[vertex].get(letter)

    def read(self, w: FreeWord, start: int = 0) -> Optional[int]:
        """Vertex reached by reading ``w`` from ``start``, or None if it falls off."""
        v = start
        for letter in w.letters:
            v = self._out[v].get(letter)
            if v is None:
                return None
        return v

    def read_prefix(self, w: FreeWord, start: int = 0) -> Tuple[int, int]:
        """Longest readable prefix: (vertex reached, number of letters read)."""
        v = start
        for position, letter in enumerate(w.letters):
            nxt = self._out[v].get(letter)
            if nxt is None:
                return v, position
            v = nxt
        return v, len(w)

    def maximal_runs(self, w: FreeWord) -> Iterator[Tuple[int, int, int, int]]:
        """Maximal subwords of ``w`` readable in the graph.

        Yields (i, v, j, u): letters i..j-1 of ``w`` read from vertex v to
        vertex u, where the run cannot be extended backwards past i or
        forwards past j. Each run is the segment a coset hull shares with
        the geodesic [1, w].
        """
        letters = w.letters
        for i in range(len(letters)):
            for v in range(self.vertex_count):
                if self._out[v].get(letters[i]) is None:
                    continue
                if i > 0 and self._out[v].get(-letters[i - 1]) is not None:
                    continue
                u, j = v, i
                while j < len(letters):
                    nxt = self._out[u].get(letters[j])
                    if nxt is None:
                        break
                    u, j = nxt, j + 1
                yield i, v, j, u

    def contains(self, w: FreeWord) -> bool:
        if w.rank != self.rank:
            raise RankMismatchError(self.rank, w.rank)
        return self.read(w) == self.basepoint

    def __contains__(self, w: FreeWord) -> bool:
        return self.contains(w)

    # -- invariants -------------------------------------------------------

    def degree(self, vertex: int) -> int:
        return len(self._out[vertex])

    def is_complete(self) -> bool:
        return all(len(out) == 2 * self.rank for out in self._out)

    def index(self):
        """Number of cosets when finite, ``math.inf`` otherwise."""
        if self.is_complete():
            return self.vertex_count
        return math.inf

    def subgroup_rank(self) -> int:
        return len(self.edges) - self.vertex_count + 1

    def is_trivial(self) -> bool:
        return not self.edges

    def has_cycle(self) -> bool:
        """Nontrivial, hence infinite, in the torsion-free ambient group."""
        return self.subgroup_rank() >= 1

    def tree_paths(self) -> List[FreeWord]:
        """Shortlex-least word from the basepoint to each vertex."""
        if self._paths is None:
            # canonical labels are BFS order, so parents precede children
            letters: List[Optional[Tuple[int, ...]]] = [None] * self.vertex_count
            letters[0] = ()
            alphabet = letters_in_order(self.rank)
            queue = deque([0])
            while queue:
                v = queue.popleft()
                for letter in alphabet:
                    w = self._out[v].get(letter)
                    if w is not None and letters[w] is None:
                        letters[w] = letters[v] + (letter,)
                        queue.append(w)
            self._paths = [FreeWord(self.rank, p) for p in letters]
        return self._paths

    def _tree_edges(self) -> Set[Edge]:
        paths = self.tree_paths()
        tree = set()
        for v in range(1, self.vertex_count):
            last = paths[v].letters[-1]
            parent = self.read(paths[v][:-1])
            tree.add((parent, last, v) if last > 0 else (v, -last, parent))
        return tree

    def basis_edges(self) -> List[Edge]:
        """Non-tree edges, one per free generator, in sorted order."""
        tree = self._tree_edges()
        return sorted(e for e in self.edges if e not in tree)

    def generators(self) -> List[FreeWord]:
        """Free basis read off the BFS spanning tree."""
        paths = self.tree_paths()
        gens = []
        for src, label, dst in self.basis_edges():
            gens.append(paths[src] * FreeWord(self.rank, (label,)) * ~paths[dst])
        return gens

    def max_generator_length(self) -> int:
        return max((len(g) for g in self.generators()), default=0)

    def spell(self, h: FreeWord) -> List[Tuple[int, int]]:
        """Express ``h`` in the basis of ``generators()`` as (basis index, ±1) pairs.

        Raises:
            ValueError: when ``h`` is not in the subgroup
        """
        if not self.contains(h):
            raise ValueError(f"{h} is not in {self}")
        basis = {e: i for i, e in enumerate(self.basis_edges())}
        spelled = []
        v = 0
        for letter in h.letters:
            w = self._out[v][letter]
            edge = (v, letter, w) if letter > 0 else (w, -letter, v)
            if edge in basis:
                spelled.append((basis[edge], 1 if letter > 0 else -1))
            v = w
        reduced: List[Tuple[int, int]] = []
        for item in spelled:
            if reduced and reduced[-1][0] == item[0] and reduced[-1][1] == -item[1]:
                reduced.pop()
            else:
                reduced.append(item)
        return reduced

    def intrinsic_length(self, h: FreeWord) -> int:
        """Word length of ``h`` in the subgroup's own basis."""
        return len(self.spell(h))

    def quasiconvexity_constant(self) -> int:
        """Largest distance from the subgroup to a geodesic between its elements.

        A prefix of an element of H that ends at vertex v is exactly
        d(v, basepoint) away from H.
        """
        return max(len(p) for p in self.tree_paths())

    def elements(self, radius: int, start: int = 0, end: Optional[int] = None) -> Iterator[FreeWord]:
        """Reduced words of length ≤ radius read from ``start`` to ``end``, shortlex order.

        With the defaults this enumerates H ∩ ball(radius).
        """
        if end is None:
            end = self.basepoint
        alphabet = letters_in_order(self.rank)
        level: List[Tuple[Tuple[int, ...], int]] = [((), start)]
        for length in range(radius + 1):
            nxt = []
            for letters, v in level:
                if v == end:
                    yield FreeWord(self.rank, letters)
                if length == radius:
                    continue
                last = letters[-1] if letters else 0
                for letter in alphabet:
                    if letter == -last:
                        continue
                    w = self._out[v].get(letter)
                    if w is not None:
                        nxt.append((letters + (letter,), w))
            level = nxt

    def conjugate(self, g: FreeWord) -> "StallingsGraph":
        """Graph of g·H·g⁻¹."""
        return StallingsGraph.from_generators(self.rank, [x.conjugate_by(g) for x in self.generators()])


# -- fiber products ---------------------------------------------------------

@dataclass(frozen=True)
class ProductComponent:
    """A connected component of the full fiber product of two graphs."""
    vertices: frozenset
    edges: Tuple[Tuple, ...]
    core_vertices: frozenset
    core_edges: Tuple[Tuple, ...]

    @property
    def has_core(self) -> bool:
        return bool(self.core_edges)


@cached_result('fiber_product')
def fiber_product(H1: StallingsGraph, H2: StallingsGraph) -> Tuple[ProductComponent, ...]:
    """Components of the pullback of H1 and H2, basepoint component first."""
    if H1.rank != H2.rank:
        raise RankMismatchError(H1.rank, H2.rank)
    base = (0, 0)
    product_edges: List[Tuple] = []
    by_label: Dict[int, List[Tuple[int, int]]] = {}
    for src, label, dst in H2.edges:
        by_label.setdefault(label, []).append((src, dst))
    for src1, label, dst1 in sorted(H1.edges):
        for src2, dst2 in sorted(by_label.get(label, [])):
            product_edges.append(((src1, src2), label, (dst1, dst2)))

    graph = nx.Graph()
    graph.add_nodes_from((v1, v2) for v1 in range(H1.vertex_count) for v2 in range(H2.vertex_count))
    graph.add_edges_from((src, dst) for src, _, dst in product_edges)

    components = []
    for nodes in nx.connected_components(graph):
        nodes = frozenset(nodes)
        edges = tuple(e for e in product_edges if e[0] in nodes)
        core_v, core_e = _prune(nodes, list(edges))
        components.append(ProductComponent(nodes, edges, frozenset(core_v), tuple(core_e)))
    components.sort(key=lambda c: (base not in c.vertices, min(c.vertices)))
    return tuple(components)


def intersect(H1: StallingsGraph, H2: StallingsGraph) -> StallingsGraph:
    """Graph of H1 ∩ H2: core of the basepoint component of the pullback."""
    base_component = fiber_product(H1, H2)[0]
    labels = {v: i for i, v in enumerate(sorted(base_component.vertices))}
    edges = [(labels[s], label, labels[d]) for s, label, d in base_component.edges]
    return StallingsGraph.from_edges(H1.rank, len(labels), edges, labels[(0, 0)])


@dataclass(frozen=True)
class DoubleCosetRep:
    """A double coset H1·g·H2 with nontrivial pullback core, or the basepoint one."""
    conjugator: FreeWord
    intersection: StallingsGraph
    infinite: bool

    def to_dict(self) -> Dict:
        return {
            "conjugator": str(self.conjugator),
            "intersection": [str(g) for g in self.intersection.generators()],
            "infinite": self.infinite,
        }


def _component_conjugator(H1: StallingsGraph, H2: StallingsGraph, component: ProductComponent) -> FreeWord:
    paths1, paths2 = H1.tree_paths(), H2.tree_paths()
    candidates = [paths1[v1] * ~paths2[v2] for v1, v2 in component.vertices]
    return min(candidates, key=FreeWord.sort_key)


def double_coset_scan(H1: StallingsGraph, H2: StallingsGraph, debug: bool = False) -> List[DoubleCosetRep]:
    """One entry per pullback component carrying a cycle, plus the basepoint component.

    The conjugator g of a component makes its loops conjugate into
    H1 ∩ g·H2·g⁻¹; it is the shortlex-least u1·u2⁻¹ over the component's
    vertex pairs, u1 and u2 being spanning-tree paths.
    """
    reps = []
    for position, component in enumerate(fiber_product(H1, H2)):
        if position > 0 and not component.has_core:
            continue
        if position == 0:
            g = FreeWord.identity(H1.rank)
        else:
            g = _component_conjugator(H1, H2, component)
        inter = intersect(H1, H2.conjugate(g))
        reps.append(DoubleCosetRep(g, inter, inter.has_cycle()))
        log_debug(f"component {position}: conjugator {g or '1'} intersection {inter}", debug)
    head, tail = reps[:1], sorted(reps[1:], key=lambda r: r.conjugator.sort_key())
    return head + tail


def is_malnormal(H: StallingsGraph) -> Tuple[bool, Optional[FreeWord]]:
    """Malnormality via the self pullback: off-basepoint components must be trees."""
    for rep in double_coset_scan(H, H)[1:]:
        if rep.infinite:
            return False, rep.conjugator
    return True, None


def _h1_conjugate(H1: StallingsGraph, K: StallingsGraph, K2: StallingsGraph, radius: int) -> bool:
    if K == K2:
        return True
    for h in H1.elements(radius):
        if K.conjugate(h) == K2:
            return True
    return False


def conjugacy_class_reps(H1: StallingsGraph, H2: StallingsGraph
                         ) -> Tuple[List[Tuple[StallingsGraph, FreeWord]], List[str]]:
    """Representatives (K_i, t_i) of the H1-conjugacy classes of infinite H1 ∩ t·H2·t⁻¹.

    Returns:
        The list of pairs and a list of warnings (non-malnormal H2)
    """
    warnings: List[str] = []
    malnormal, witness = is_malnormal(H2)
    if not malnormal:
        message = f"second subgroup {H2} is not malnormal (witness {witness}); classes deduplicated by bounded search"
        warnings.append(message)
        log_warning(message)
    reps: List[Tuple[StallingsGraph, FreeWord]] = []
    for rep in double_coset_scan(H1, H2):
        if not rep.infinite:
            continue
        if not malnormal:
            duplicate = False
            for K, t in reps:
                radius = len(t) + len(rep.conjugator) + 2 * max(
                    K.quasiconvexity_constant(), rep.intersection.quasiconvexity_constant())
                if _h1_conjugate(H1, rep.intersection, K, radius):
                    duplicate = True
                    break
            if duplicate:
                continue
        reps.append((rep.intersection, rep.conjugator))
    return reps, warnings


def sample_independent_basis(rank: int, word_length: int, seed: int,
                             retries: int = DEFAULT_SAMPLER_RETRIES,
                             debug: bool = False) -> Tuple[FreeWord, FreeWord]:
    """Draw (w1, w2) whose subgroup is free of rank 2, malnormal and of infinite index.

    Raises:
        BudgetExceededError: when no sample passes within ``retries`` attempts
    """
    if word_length < 1:
        raise ValueError("word length must be positive")
    rng = random.Random(seed)
    for attempt in range(1, retries + 1):
        w1 = random_word(rank, word_length, rng)
        w2 = random_word(rank, word_length, rng)
        H = StallingsGraph.from_generators(rank, [w1, w2])
        if H.subgroup_rank() != 2 or H.index() != math.inf:
            continue
        if is_malnormal(H)[0]:
            log_debug(f"sampler accepted <{w1}, {w2}> after {attempt} attempt(s)", debug)
            return w1, w2
    raise BudgetExceededError(
        f"no malnormal rank-2 subgroup with generators of length {word_length} after {retries} attempts",
        retries)


def random_independent_subgroup(rank: int, word_length: int, seed: int,
                                retries: int = DEFAULT_SAMPLER_RETRIES) -> StallingsGraph:
    w1, w2 = sample_independent_basis(rank, word_length, seed, retries)
    return StallingsGraph.from_generators(rank, [w1, w2])


def conjugacy_key(H: StallingsGraph) -> Optional[Tuple]:
    """Conjugation-invariant key: the cyclic core, canonically based at its least vertex.

    Two subgroups are conjugate in F_n exactly when their keys agree; the
    trivial subgroup has key None.
    """
    core_vertices, core_edges = _prune(range(H.vertex_count), sorted(H.edges))
    if not core_edges:
        return None
    best = None
    for v in sorted(core_vertices):
        _, edges = _canonical_form(H.rank, core_vertices, core_edges, v)
        candidate = tuple(sorted(edges))
        if best is None or candidate < best:
            best = candidate
    return (H.rank, best)
