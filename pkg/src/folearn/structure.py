"""Finite relational structures, their Gaifman graphs, and query-counted local access.

A ``RelStructure`` is immutable once built. Learners never touch it directly;
they go through a ``LocalAccessOracle``, which answers relation-membership and
neighbourhood queries and keeps exact counters of both.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Sequence

Element = str
Tup = tuple[str, ...]


class StructureError(ValueError):
    """Raised for malformed structures or structure documents."""


class UnknownElement(StructureError):
    pass


class _Infinity:
    """Distance marker for unreachable pairs (or pairs beyond a search cap)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("folearn.INF")

    def __lt__(self, other) -> bool:
        return False

    def __gt__(self, other) -> bool:
        return other is not self

    def __le__(self, other) -> bool:
        return other is self

    def __ge__(self, other) -> bool:
        return True


INF = _Infinity()


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation symbols in {names}")
        for name, arity in self.symbols:
            if not isinstance(arity, int) or arity < 1:
                raise StructureError(f"arity of {name!r} must be a positive integer, got {arity!r}")
        object.__setattr__(self, "symbols", tuple(sorted(self.symbols)))

    @classmethod
    def of(cls, arities: Mapping[str, int]) -> Vocabulary:
        return cls(tuple(arities.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(sym == name for sym, _ in self.symbols)

    def as_dict(self) -> dict[str, int]:
        return dict(self.symbols)


class RelStructure:
    """A finite structure over a relational vocabulary.

    The universe keeps the order it was given in; ``sorted_universe`` is the
    canonical (lexicographic) order used for tie-breaking elsewhere.
    """

    __slots__ = ("vocabulary", "universe", "relations", "_members", "__dict__")

    def __init__(
        self,
        vocabulary: Vocabulary,
        universe: Sequence[Element],
        relations: Mapping[str, Iterable[Sequence[Element]]] | None = None,
    ):
        relations = dict(relations or {})
        universe = tuple(universe)
        members = frozenset(universe)
        if len(members) != len(universe):
            raise StructureError("element ids must be unique")
        unknown_symbols = set(relations) - set(vocabulary.names)
        if unknown_symbols:
            raise StructureError(f"relations for undeclared symbols: {sorted(unknown_symbols)}")
        rels: dict[str, frozenset[Tup]] = {}
        for name, arity in vocabulary.symbols:
            tuples = set()
            for raw in relations.get(name, ()):
                tup = tuple(raw)
                if len(tup) != arity:
                    raise StructureError(f"{name}{tup}: expected arity {arity}, got {len(tup)}")
                for el in tup:
                    if el not in members:
                        raise UnknownElement(f"{name}{tup}: element {el!r} is not in the universe")
                tuples.add(tup)
            rels[name] = frozenset(tuples)
        self.vocabulary = vocabulary
        self.universe = universe
        self.relations = rels
        self._members = members

    def __contains__(self, element: Element) -> bool:
        return element in self._members

    def __len__(self) -> int:
        return len(self.universe)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RelStructure):
            return NotImplemented
        return (
            self.vocabulary == other.vocabulary
            and self._members == other._members
            and self.relations == other.relations
        )

    def __hash__(self):
        return hash((self.vocabulary, self._members))

    def __repr__(self) -> str:
        sizes = ", ".join(f"{name}:{len(tuples)}" for name, tuples in self.relations.items())
        return f"RelStructure(|U|={len(self.universe)}, {sizes})"

    @cached_property
    def sorted_universe(self) -> tuple[Element, ...]:
        return tuple(sorted(self.universe))

    @cached_property
    def adjacency(self) -> dict[Element, frozenset[Element]]:
        """Gaifman adjacency: u ~ v iff u != v co-occur in some tuple."""
        adj: dict[Element, set[Element]] = {u: set() for u in self.universe}
        for tuples in self.relations.values():
            for tup in tuples:
                distinct = set(tup)
                if len(distinct) < 2:
                    continue
                for u in distinct:
                    adj[u].update(distinct)
                    adj[u].discard(u)
        return {u: frozenset(vs) for u, vs in adj.items()}

    def bfs_distances(self, source: Element) -> dict[Element, int]:
        """All finite Gaifman distances from ``source`` (cached per source)."""
        cache = self.__dict__.setdefault("_bfs_cache", {})
        try:
            return cache[source]
        except KeyError:
            pass
        self.check_element(source)
        adj = self.adjacency
        dist = {source: 0}
        frontier = [source]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if v not in dist:
                        dist[v] = d
                        nxt.append(v)
            frontier = nxt
        cache[source] = dist
        return dist

    def check_element(self, element: Element) -> None:
        if element not in self._members:
            raise UnknownElement(f"unknown element {element!r}")

    def holds(self, symbol: str, tup: Tup) -> bool:
        return tup in self.relations[symbol]


# -- documents ---------------------------------------------------------------

_DOC_KEYS = {"universe", "vocabulary", "relations"}


def load_structure(doc: Mapping | str) -> RelStructure:
    """Build a structure from a parsed JSON document (or its text)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise StructureError(f"structure document is not valid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise StructureError("structure document must be a JSON object")
    extra = set(doc) - _DOC_KEYS
    if extra:
        raise StructureError(f"unknown keys in structure document: {sorted(extra)}")
    missing = _DOC_KEYS - set(doc)
    if missing:
        raise StructureError(f"structure document lacks keys: {sorted(missing)}")
    universe = doc["universe"]
    if not isinstance(universe, list) or not all(isinstance(u, str) for u in universe):
        raise StructureError("universe must be a list of strings")
    vocab_doc = doc["vocabulary"]
    if not isinstance(vocab_doc, Mapping):
        raise StructureError("vocabulary must map symbol names to arities")
    vocabulary = Vocabulary.of(vocab_doc)
    relations = doc["relations"]
    if not isinstance(relations, Mapping):
        raise StructureError("relations must be an object")
    for name, tuples in relations.items():
        if not isinstance(tuples, list) or not all(isinstance(t, list) for t in tuples):
            raise StructureError(f"relation {name!r} must be a list of element lists")
    return RelStructure(vocabulary, universe, relations)


def load_structure_file(path) -> RelStructure:
    with open(path, encoding="utf-8") as fh:
        return load_structure(json.load(fh))


def structure_to_doc(s: RelStructure) -> dict:
    return {
        "universe": list(s.universe),
        "vocabulary": s.vocabulary.as_dict(),
        "relations": {name: [list(t) for t in sorted(tuples)] for name, tuples in s.relations.items()},
    }


# -- plain structure operations ----------------------------------------------


def induced(s: RelStructure, elements: Iterable[Element]) -> RelStructure:
    chosen = set(elements)
    for el in chosen:
        s.check_element(el)
    universe = [u for u in s.universe if u in chosen]
    relations = {
        name: [t for t in tuples if all(el in chosen for el in t)] for name, tuples in s.relations.items()
    }
    return RelStructure(s.vocabulary, universe, relations)


def disjoint_union(a: RelStructure, b: RelStructure) -> RelStructure:
    if a.vocabulary != b.vocabulary:
        raise StructureError("disjoint union needs identical vocabularies")
    shared = set(a.universe) & set(b.universe)
    if shared:
        raise StructureError(f"universes overlap on {sorted(shared)[:5]}")
    relations = {name: a.relations[name] | b.relations[name] for name in a.relations}
    return RelStructure(a.vocabulary, a.universe + b.universe, relations)


def max_degree(s: RelStructure) -> int:
    return max((len(vs) for vs in s.adjacency.values()), default=0)


# -- local access ------------------------------------------------------------


@dataclass
class QueryCounts:
    relation_queries: int = 0
    neighbor_queries: int = 0
    neighbor_answer_size: int = 0

    @property
    def total(self) -> int:
        return self.relation_queries + self.neighbor_queries


class LocalAccessOracle:
    """Relation and neighbourhood queries against a backing structure.

    Every answer is counted, and every element handed out by a neighbourhood
    query is remembered in ``returned``. Neighbourhood answers come back in
    canonical order.
    """

    def __init__(self, backing: RelStructure):
        self.backing = backing
        self.counts = QueryCounts()
        self.returned: set[Element] = set()
        self._lock = threading.Lock()
        self._adj = backing.adjacency

    @property
    def vocabulary(self) -> Vocabulary:
        return self.backing.vocabulary

    def is_element(self, u: Element) -> bool:
        return u in self.backing

    def relation_query(self, symbol: str, tup: Sequence[Element]) -> bool:
        tup = tuple(tup)
        for el in tup:
            self.backing.check_element(el)
        if symbol not in self.backing.relations:
            raise StructureError(f"unknown relation symbol {symbol!r}")
        with self._lock:
            self.counts.relation_queries += 1
        return tup in self.backing.relations[symbol]

    def neighbor_query(self, u: Element) -> tuple[Element, ...]:
        self.backing.check_element(u)
        answer = tuple(sorted(self._adj[u]))
        with self._lock:
            self.counts.neighbor_queries += 1
            self.counts.neighbor_answer_size += len(answer)
            self.returned.update(answer)
        return answer

    def snapshot(self) -> QueryCounts:
        with self._lock:
            return QueryCounts(**vars(self.counts))


class CachedAccess:
    """Memoising front for an oracle, used within one learner run.

    A learner that has already asked for the neighbours of ``u`` keeps the
    answer; only cache misses reach (and are charged by) the oracle.
    """

    def __init__(self, oracle: LocalAccessOracle):
        self.oracle = oracle
        self._neighbors: dict[Element, tuple[Element, ...]] = {}
        self._relations: dict[tuple[str, Tup], bool] = {}

    @property
    def vocabulary(self) -> Vocabulary:
        return self.oracle.vocabulary

    def is_element(self, u: Element) -> bool:
        return self.oracle.is_element(u)

    def neighbor_query(self, u: Element) -> tuple[Element, ...]:
        try:
            return self._neighbors[u]
        except KeyError:
            answer = self._neighbors[u] = self.oracle.neighbor_query(u)
            return answer

    def relation_query(self, symbol: str, tup: Sequence[Element]) -> bool:
        key = (symbol, tuple(tup))
        try:
            return self._relations[key]
        except KeyError:
            answer = self._relations[key] = self.oracle.relation_query(symbol, key[1])
            return answer


def gaifman_neighbors(oracle, u: Element) -> frozenset[Element]:
    return frozenset(oracle.neighbor_query(u))


@dataclass(frozen=True)
class Ball:
    center: Tup
    radius: int
    view: RelStructure
    distance_map: Mapping[Element, int] = field(repr=False)


def _bfs_layers(oracle, sources: Iterable[Element], radius: int):
    """Distances up to ``radius`` plus the neighbour lists that were queried."""
    dist: dict[Element, int] = {}
    known: dict[Element, tuple[Element, ...]] = {}
    frontier = deque()
    for u in sources:
        if not oracle.is_element(u):
            raise UnknownElement(f"unknown element {u!r}")
        if u not in dist:
            dist[u] = 0
            frontier.append(u)
    while frontier:
        u = frontier.popleft()
        du = dist[u]
        if du >= radius:
            continue
        nbrs = known[u] = oracle.neighbor_query(u)
        for v in nbrs:
            if v not in dist:
                dist[v] = du + 1
                frontier.append(v)
    return dist, known


def neighbourhood(oracle, center: Sequence[Element], radius: int) -> set[Element]:
    """N_radius(center) as a set, via neighbourhood queries on inner elements only."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    dist, _ = _bfs_layers(oracle, center, radius)
    return set(dist)


def ball(oracle, center: Sequence[Element], radius: int) -> Ball:
    """The induced substructure on N_radius(center), built through local access only.

    Neighbourhood queries are issued for elements strictly inside the ball,
    never for the rim, so no element beyond the radius is ever revealed.
    Relation tuples are found with relation queries: the components of a
    tuple are pairwise Gaifman-adjacent or equal, so a tuple touching an inner
    element ``w`` lies in the closed neighbourhood of ``w``; tuples made of rim
    elements only are probed exhaustively.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    center = tuple(center)
    dist, known = _bfs_layers(oracle, center, radius)
    elements = sorted(dist)
    rim = [u for u in elements if dist[u] == radius]
    vocab = oracle.vocabulary
    relations: dict[str, list[Tup]] = {}
    for name, arity in vocab.symbols:
        if arity == 1:
            candidates = [(u,) for u in elements]
        else:
            seen: set[Tup] = set()
            candidates = []
            for w, nbrs in known.items():
                closed = [w] + [v for v in nbrs if v in dist]
                for tup in product(closed, repeat=arity):
                    if w in tup and tup not in seen:
                        seen.add(tup)
                        candidates.append(tup)
            for tup in product(rim, repeat=arity):
                if tup not in seen:
                    seen.add(tup)
                    candidates.append(tup)
        relations[name] = [tup for tup in candidates if oracle.relation_query(name, tup)]
    view = RelStructure(vocab, elements, relations)
    return Ball(center, radius, view, dist)


def distance(oracle, u: Element, v: Element, cap: int):
    """Gaifman distance from u to v, or INF if it exceeds ``cap``."""
    if not oracle.is_element(v):
        raise UnknownElement(f"unknown element {v!r}")
    if u == v:
        if not oracle.is_element(u):
            raise UnknownElement(f"unknown element {u!r}")
        return 0
    seen = {u}
    frontier = [u]
    if not oracle.is_element(u):
        raise UnknownElement(f"unknown element {u!r}")
    for d in range(1, cap + 1):
        nxt = []
        for w in frontier:
            for x in oracle.neighbor_query(w):
                if x == v:
                    return d
                if x not in seen:
                    seen.add(x)
                    nxt.append(x)
        if not nxt:
            break
        frontier = nxt
    return INF
