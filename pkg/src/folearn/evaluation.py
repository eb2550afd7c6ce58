"""Model checking and local types.

``models`` is a direct recursive evaluator; quantifiers range over the
universe of whatever structure it is handed (the whole background structure
or a ball). Distance atoms use Gaifman distance in that same structure.

Types are rank-q type trees: the atomic type of the marked tuple together
with the set of rank-(q-1) trees of all its one-element extensions. Two
tuples with equal trees satisfy the same formulas of quantifier rank <= q.
``type_key`` turns a tree into canonical bytes (layout documented there).
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

from .hypotheses import FormulaHyp, Hypothesis, TypeHyp
from .logic import (
    And,
    Const,
    DistAtom,
    Equality,
    Exists,
    Forall,
    Formula,
    HypothesisTemplate,
    Not,
    Or,
    RelationAtom,
    _guard_of_exists,
    _guard_of_forall,
    free_vars,
    is_quantifier_free,
    uses_distance,
)
from .structure import RelStructure, UnknownElement, ball


class EvaluationError(ValueError):
    pass


class UnassignedVariable(EvaluationError):
    pass


# -- model checking ----------------------------------------------------------


def _holds(s: RelStructure, f: Formula, asg: dict) -> bool:
    t = type(f)
    if t is RelationAtom:
        rel = s.relations.get(f.symbol)
        if rel is None:
            raise EvaluationError(f"relation symbol {f.symbol!r} not in vocabulary")
        return tuple(asg[v] for v in f.args) in rel
    if t is Equality:
        return asg[f.left] == asg[f.right]
    if t is And:
        for c in f.children:
            if not _holds(s, c, asg):
                return False
        return True
    if t is Or:
        for c in f.children:
            if _holds(s, c, asg):
                return True
        return False
    if t is Not:
        return not _holds(s, f.child, asg)
    if t is DistAtom:
        d = s.bfs_distances(asg[f.left]).get(asg[f.right])
        within = d is not None and d <= f.bound
        return not within if f.negated else within
    if t is Exists or t is Forall:
        var = f.var
        saved = asg.get(var, _MISSING)
        want = t is Exists
        result = not want
        domain = _guarded_domain(s, f, asg)
        try:
            for u in s.universe if domain is None else domain:
                asg[var] = u
                if _holds(s, f.body, asg) is want:
                    result = want
                    break
        finally:
            if saved is _MISSING:
                asg.pop(var, None)
            else:
                asg[var] = saved
        return result
    if t is Const:
        return f.value
    raise TypeError(f"not a formula: {f!r}")


_MISSING = object()


def _guarded_domain(s: RelStructure, f, asg: dict):
    """Elements that can satisfy the distance guard of a relativised quantifier.

    Outside this set the guard is false, which already decides the body
    (false under an existential, true under a universal). None means no
    recognisable guard, so the whole universe must be scanned.
    """
    guard = _guard_of_exists(f.body) if type(f) is Exists else _guard_of_forall(f.body)
    if guard is None:
        return None
    atoms = guard.children if type(guard) is Or else (guard,)
    domain = set()
    for a in atoms:
        if type(a) is not DistAtom or a.negated or a.right != f.var or a.left == f.var or a.left not in asg:
            return None
        domain.update(u for u, d in s.bfs_distances(asg[a.left]).items() if d <= a.bound)
    return domain


def models(s: RelStructure, f: Formula, assignment: Mapping[str, str]) -> bool:
    """``s |= f[assignment]``."""
    for v in free_vars(f):
        if v not in assignment:
            raise UnassignedVariable(f"variable {v!r} is not assigned")
        s.check_element(assignment[v])
    return _holds(s, f, dict(assignment))


def template_assignment(t: HypothesisTemplate, tup: Sequence[str], params: Sequence[str]) -> dict[str, str]:
    if len(tup) != t.k or len(params) != t.ell:
        raise EvaluationError(
            f"template expects {t.k} instance and {t.ell} parameter values, got {len(tup)} and {len(params)}"
        )
    return dict(zip(t.variables, tuple(tup) + tuple(params)))


def evaluation_radius(template: HypothesisTemplate, radius: int) -> int:
    """Radius of the ball a formula hypothesis must see.

    A quantifier-free body without distance atoms only mentions relations
    among the tuple's own components, so the radius-0 ball (a subset of the
    radius-r one) already decides it.
    """
    if is_quantifier_free(template.body) and not uses_distance(template.body):
        return 0
    return radius


class QueryView:
    """Stand-in for the radius-0 ball: relation atoms are answered by oracle queries.

    Only valid for bodies without quantifiers or distance atoms, which never
    look past the components of the tuple.
    """

    def __init__(self, oracle):
        self.relations = _QueriedRelations(oracle)


class _QueriedRelations(dict):
    def __init__(self, oracle):
        super().__init__()
        self.oracle = oracle

    def __missing__(self, name):
        rel = self[name] = _QueriedRelation(self.oracle, name)
        return rel

    def get(self, name, default=None):
        if name not in self.oracle.vocabulary:
            return default
        return self[name]


class _QueriedRelation:
    __slots__ = ("oracle", "name")

    def __init__(self, oracle, name):
        self.oracle = oracle
        self.name = name

    def __contains__(self, tup) -> bool:
        return self.oracle.relation_query(self.name, tup)


def hyp_value(oracle, h: Hypothesis, tup: Sequence[str]) -> int:
    """Value of ``h`` at ``tup``, looking only at the ball around tup + params."""
    tup = tuple(tup)
    if isinstance(h, FormulaHyp):
        if len(tup) != h.k:
            raise EvaluationError(f"hypothesis is {h.k}-ary, got a {len(tup)}-tuple")
        full = tup + h.params
        radius = evaluation_radius(h.template, h.radius)
        if radius == 0:
            for u in full:
                if not oracle.is_element(u):
                    raise UnknownElement(f"unknown element {u!r}")
            view = QueryView(oracle)
        else:
            view = ball(oracle, full, radius).view
        return int(_holds(view, h.template.body, template_assignment(h.template, tup, h.params)))
    if isinstance(h, TypeHyp):
        return int(local_type(oracle, tup + h.params, h.q_t, h.radius).digest in h.accepted_keys)
    raise TypeError(f"not a hypothesis: {h!r}")


# -- type trees --------------------------------------------------------------

# A tree is (depth, atomic, children) with atomic = (equality pattern, hits),
# hits a frozenset of (symbol index, index tuple) and children a frozenset of
# trees one level shallower. Trees are interned per computation so that
# equality checks mostly short-circuit on identity.
TypeTree = tuple


class _TypeComputer:
    def __init__(self, s: RelStructure):
        self.s = s
        self.symbols = [(i, s.relations[name], arity) for i, (name, arity) in enumerate(s.vocabulary.symbols)]
        self._index_tuples: dict[tuple[int, int], list[tuple[int, ...]]] = {}
        self._intern: dict[TypeTree, TypeTree] = {}

    def new_index_tuples(self, m: int, arity: int) -> list[tuple[int, ...]]:
        """Index tuples over range(m+1) that mention the newest index m."""
        key = (m, arity)
        try:
            return self._index_tuples[key]
        except KeyError:
            tuples = [t for t in product(range(m + 1), repeat=arity) if m in t]
            self._index_tuples[key] = tuples
            return tuples

    def extend_atomic(self, atomic, tup: tuple, w: str):
        eq, hits = atomic
        m = len(tup)
        ext = tup + (w,)
        first = m
        for j, u in enumerate(tup):
            if u == w:
                first = j
                break
        new_hits = []
        for sym, rel, arity in self.symbols:
            for idx in self.new_index_tuples(m, arity):
                if tuple(ext[i] for i in idx) in rel:
                    new_hits.append((sym, idx))
        if new_hits:
            hits = hits | frozenset(new_hits)
        return (eq + (first,), hits)

    def atomic(self, tup: tuple):
        atomic = ((), frozenset())
        for i in range(len(tup)):
            atomic = self.extend_atomic(atomic, tup[:i], tup[i])
        return atomic

    def tree(self, tup: tuple, atomic, depth: int) -> TypeTree:
        if depth == 0:
            node = (0, atomic, frozenset())
        else:
            children = set()
            for w in self.s.universe:
                children.add(self.tree(tup + (w,), self.extend_atomic(atomic, tup, w), depth - 1))
            node = (depth, atomic, frozenset(children))
        return self._intern.setdefault(node, node)


def ef_type(s: RelStructure, tup: Sequence[str], q: int) -> TypeTree:
    """Rank-q type tree of ``tup`` in ``s``."""
    tup = tuple(tup)
    for u in tup:
        s.check_element(u)
    if q < 0:
        raise ValueError("depth must be non-negative")
    tc = _TypeComputer(s)
    return tc.tree(tup, tc.atomic(tup), q)


def _atomic_bytes(atomic) -> bytes:
    eq, hits = atomic
    out = bytearray([len(eq)])
    out.extend(eq)
    ordered = sorted(hits)
    out.extend(struct.pack(">H", len(ordered)))
    for sym, idx in ordered:
        out.append(sym)
        out.append(len(idx))
        out.extend(idx)
    return bytes(out)


def type_key(tree: TypeTree, _memo: dict | None = None) -> bytes:
    """Canonical bytes of a type tree.

    Layout, big-endian: depth (u8), length of the atomic block (u32), atomic
    block, number of children (u32), then each child key as length (u32) +
    bytes, children sorted bytewise. The atomic block is the tuple length
    (u8), the equality pattern (one u8 per position: index of the first equal
    component), the number of relation hits (u16) and each hit as symbol index
    (u8, canonical vocabulary order), arity (u8) and the component indices.
    """
    memo = {} if _memo is None else _memo
    ident = id(tree)
    cached = memo.get(ident)
    if cached is not None:
        return cached[1]
    depth, atomic, children = tree
    atom = _atomic_bytes(atomic)
    child_keys = sorted(type_key(c, memo) for c in children)
    parts = [struct.pack(">BI", depth, len(atom)), atom, struct.pack(">I", len(child_keys))]
    for ck in child_keys:
        parts.append(struct.pack(">I", len(ck)))
        parts.append(ck)
    key = b"".join(parts)
    memo[ident] = (tree, key)  # keep tree alive so its id stays unique
    return key


@dataclass(frozen=True)
class LocalType:
    q: int
    r: int
    tuple_len: int
    key: bytes

    @property
    def digest(self) -> bytes:
        """SHA-256 of ``key``; the compact form stored in hypotheses."""
        return hashlib.sha256(self.key).digest()


def local_type(oracle, tup: Sequence[str], q: int, r: int) -> LocalType:
    """Local (q, r)-type: the type tree of ``tup`` inside its radius-r ball."""
    tup = tuple(tup)
    b = ball(oracle, tup, r)
    return LocalType(q, r, len(tup), type_key(ef_type(b.view, tup, q)))


def local_type_of_view(view: RelStructure, tup: Sequence[str], q: int, r: int) -> LocalType:
    return LocalType(q, r, len(tup), type_key(ef_type(view, tuple(tup), q)))


def default_type_depth(q_star: int, r_star: int) -> int:
    """Type depth that absorbs the cost of expressing the distance guards."""
    return q_star + math.ceil(math.log2(max(r_star, 1))) + 2
