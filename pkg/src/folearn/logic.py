"""First-order formulas with a built-in distance atom.

Formulas are immutable trees. ``parse_formula`` reads the ASCII template
syntax::

    phi(x1,...,xk; y1,...,yl) := body

where the body uses ``R(x,y)``, ``x = y``, ``d<=r(x,y)``, ``d>r(x,y)``,
``true``, ``false``, ``!``, ``&``, ``|``, ``->`` (loosest, right-associative),
``exists v. body`` and ``forall v. body``. Implication and ``d>r`` are
desugared while parsing, so the tree only ever contains the node types below.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterator, Sequence

from .structure import Vocabulary


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class UndeclaredVariable(ValueError):
    pass


# -- AST ---------------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class RelationAtom(Formula):
    symbol: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Equality(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class DistAtom(Formula):
    """``d<=bound(left, right)``, or ``d>bound`` when negated."""

    left: str
    right: str
    bound: int
    negated: bool = False

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("distance bound must be non-negative")


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("And needs at least one child")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("Or needs at least one child")


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


TRUE = Const(True)
FALSE = Const(False)


def implies(premise: Formula, conclusion: Formula) -> Formula:
    return Or((Not(premise), conclusion))


@dataclass(frozen=True)
class HypothesisTemplate:
    instance_vars: tuple[str, ...]
    parameter_vars: tuple[str, ...]
    body: Formula
    name: str = field(default="phi", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instance_vars", tuple(self.instance_vars))
        object.__setattr__(self, "parameter_vars", tuple(self.parameter_vars))
        declared = self.instance_vars + self.parameter_vars
        if len(set(declared)) != len(declared):
            raise ValueError(f"template variables must be distinct: {declared}")
        undeclared = [v for v in free_vars(self.body) if v not in declared]
        if undeclared:
            raise UndeclaredVariable(f"undeclared free variable(s) {', '.join(undeclared)}")

    @property
    def k(self) -> int:
        return len(self.instance_vars)

    @property
    def ell(self) -> int:
        return len(self.parameter_vars)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.instance_vars + self.parameter_vars

    def __str__(self) -> str:
        return render_template(self)


# -- structural queries ------------------------------------------------------


def quantifier_rank(f: Formula) -> int:
    if isinstance(f, (Exists, Forall)):
        return 1 + quantifier_rank(f.body)
    if isinstance(f, Not):
        return quantifier_rank(f.child)
    if isinstance(f, (And, Or)):
        return max(quantifier_rank(c) for c in f.children)
    return 0


def free_vars(f: Formula) -> tuple[str, ...]:
    """Free variables in order of first occurrence."""
    out: dict[str, None] = {}

    def walk(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, RelationAtom):
            names: Sequence[str] = g.args
        elif isinstance(g, (Equality, DistAtom)):
            names = (g.left, g.right)
        elif isinstance(g, Not):
            walk(g.child, bound)
            return
        elif isinstance(g, (And, Or)):
            for c in g.children:
                walk(c, bound)
            return
        elif isinstance(g, (Exists, Forall)):
            walk(g.body, bound | {g.var})
            return
        else:
            return
        for v in names:
            if v not in bound:
                out.setdefault(v, None)

    walk(f, frozenset())
    return tuple(out)


def is_quantifier_free(f: Formula) -> bool:
    return quantifier_rank(f) == 0


def uses_distance(f: Formula) -> bool:
    if isinstance(f, DistAtom):
        return True
    if isinstance(f, Not):
        return uses_distance(f.child)
    if isinstance(f, (And, Or)):
        return any(uses_distance(c) for c in f.children)
    if isinstance(f, (Exists, Forall)):
        return uses_distance(f.body)
    return False


def relation_symbols(f: Formula) -> set[str]:
    if isinstance(f, RelationAtom):
        return {f.symbol}
    if isinstance(f, Not):
        return relation_symbols(f.child)
    if isinstance(f, (And, Or)):
        return set().union(*(relation_symbols(c) for c in f.children))
    if isinstance(f, (Exists, Forall)):
        return relation_symbols(f.body)
    return set()


# -- rendering ---------------------------------------------------------------


def render(f: Formula) -> str:
    while isinstance(f, (And, Or)) and len(f.children) == 1:
        f = f.children[0]
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, RelationAtom):
        return f"{f.symbol}({','.join(f.args)})"
    if isinstance(f, Equality):
        return f"{f.left} = {f.right}"
    if isinstance(f, DistAtom):
        op = ">" if f.negated else "<="
        return f"d{op}{f.bound}({f.left},{f.right})"
    if isinstance(f, Not):
        return "!" + _wrap(f.child, (And, Or, Exists, Forall))
    if isinstance(f, And):
        return " & ".join(_wrap(c, (And, Or, Exists, Forall)) for c in f.children)
    if isinstance(f, Or):
        return " | ".join(_wrap(c, (Or, Exists, Forall)) for c in f.children)
    if isinstance(f, Exists):
        return f"exists {f.var}. {render(f.body)}"
    if isinstance(f, Forall):
        return f"forall {f.var}. {render(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula, kinds) -> str:
    # a one-child connective prints as its child, so decide on the child
    while isinstance(f, (And, Or)) and len(f.children) == 1:
        f = f.children[0]
    text = render(f)
    return f"({text})" if isinstance(f, kinds) else text


def render_template(t: HypothesisTemplate) -> str:
    return f"{t.name}({','.join(t.instance_vars)}; {','.join(t.parameter_vars)}) := {render(t.body)}"


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<dist>d(?P<dop><=|>)(?P<bound>\d+)(?=\s*\())
  | (?P<assign>:=)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[()!&|=,;.])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"exists", "forall", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind == "ws":
            pass
        elif kind in ("dop", "bound", "dist"):
            toks.append(_Tok("dist", m.group(0), pos))
        elif kind == "ident" and m.group(0) in _KEYWORDS:
            toks.append(_Tok(m.group(0), m.group(0), pos))
        elif kind == "punct":
            toks.append(_Tok(m.group(0), m.group(0), pos))
        else:
            toks.append(_Tok(kind, m.group(0), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        tok = self.cur
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise FormulaSyntaxError(f"expected {kind!r}, found {shown!r}", tok.pos)
        self.i += 1
        return tok

    def accept(self, kind: str) -> bool:
        if self.cur.kind == kind:
            self.i += 1
            return True
        return False

    def var_list(self, stop: str) -> list[str]:
        names = []
        if self.cur.kind == stop:
            return names
        names.append(self.take("ident").text)
        while self.accept(","):
            names.append(self.take("ident").text)
        return names

    def template(self) -> HypothesisTemplate:
        name = self.take("ident").text
        self.take("(")
        xs = self.var_list(";")
        self.take(";")
        ys = self.var_list(")")
        self.take(")")
        self.take("assign")
        body_pos = self.cur.pos
        body = self.formula()
        self.take("eof")
        declared = set(xs) | set(ys)
        for v in free_vars(body):
            if v not in declared:
                raise UndeclaredVariable(f"undeclared variable {v!r} (body starts at position {body_pos})")
        return HypothesisTemplate(tuple(xs), tuple(ys), body, name=name)

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.accept("arrow"):
            return implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        tok = self.cur
        if self.accept("!"):
            return Not(self.unary())
        if tok.kind in ("exists", "forall"):
            self.i += 1
            var = self.take("ident").text
            self.take(".")
            body = self.formula()
            return Exists(var, body) if tok.kind == "exists" else Forall(var, body)
        if self.accept("("):
            inner = self.formula()
            self.take(")")
            return inner
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if tok.kind == "dist":
            self.i += 1
            m = re.fullmatch(r"d(<=|>)(\d+)", tok.text)
            self.take("(")
            a = self.take("ident").text
            self.take(",")
            b = self.take("ident").text
            self.take(")")
            return DistAtom(a, b, int(m.group(2)), negated=m.group(1) == ">")
        if tok.kind == "ident":
            self.i += 1
            if self.accept("("):
                args = self.var_list(")")
                if not args:
                    raise FormulaSyntaxError(f"relation {tok.text} needs arguments", tok.pos)
                self.take(")")
                return RelationAtom(tok.text, tuple(args))
            if self.accept("="):
                return Equality(tok.text, self.take("ident").text)
            raise FormulaSyntaxError(f"expected '(' or '=' after {tok.text!r}", self.cur.pos)
        shown = tok.text or "end of input"
        raise FormulaSyntaxError(f"unexpected {shown!r}", tok.pos)


def parse_formula(text: str) -> HypothesisTemplate:
    """Parse a template ``name(x..; y..) := body``."""
    return _Parser(text).template()


def parse_body(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    p.take("eof")
    return f


# -- locality ----------------------------------------------------------------


def distance_guard(variables: Sequence[str], z: str, r: int) -> Formula:
    """The disjunction saying ``z`` is within distance r of one of ``variables``."""
    atoms = tuple(DistAtom(v, z, r) for v in variables)
    if not atoms:
        return FALSE
    if len(atoms) == 1:
        return atoms[0]
    return Or(atoms)


def _guard_of_exists(body: Formula) -> Formula | None:
    if isinstance(body, And) and len(body.children) >= 2:
        return body.children[0]
    return None


def _guard_of_forall(body: Formula) -> Formula | None:
    if isinstance(body, Or) and len(body.children) >= 2 and isinstance(body.children[0], Not):
        return body.children[0].child
    return None


def _relativize_body(f: Formula, variables: tuple[str, ...], r: int) -> Formula:
    if isinstance(f, Not):
        return Not(_relativize_body(f.child, variables, r))
    if isinstance(f, And):
        return And(tuple(_relativize_body(c, variables, r) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(_relativize_body(c, variables, r) for c in f.children))
    if isinstance(f, (Exists, Forall)):
        if f.var in variables:
            raise ValueError(f"quantifier rebinds template variable {f.var!r}")
        guard = distance_guard(variables, f.var, r)
        if isinstance(f, Exists):
            if _guard_of_exists(f.body) == guard:
                children = f.body.children
                return Exists(f.var, And((guard,) + tuple(_relativize_body(c, variables, r) for c in children[1:])))
            return Exists(f.var, And((guard, _relativize_body(f.body, variables, r))))
        if _guard_of_forall(f.body) == guard:
            children = f.body.children
            return Forall(f.var, Or((Not(guard),) + tuple(_relativize_body(c, variables, r) for c in children[1:])))
        return Forall(f.var, Or((Not(guard), _relativize_body(f.body, variables, r))))
    return f


def relativize(t: HypothesisTemplate, r: int) -> HypothesisTemplate:
    """Radius-r relativisation: every quantifier ranges over N_r of the template variables.

    Quantifiers that already carry exactly this guard are left alone, so the
    operation is idempotent.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    body = _relativize_body(t.body, t.variables, r)
    return HypothesisTemplate(t.instance_vars, t.parameter_vars, body, name=t.name)


def _is_guard_for(g: Formula, variables: tuple[str, ...], z: str, r: int) -> bool:
    atoms = g.children if isinstance(g, Or) else (g,)
    if not variables:
        return g == FALSE
    if len(atoms) != len(variables):
        return False
    for atom, v in zip(atoms, variables):
        if not (isinstance(atom, DistAtom) and not atom.negated and atom.left == v and atom.right == z):
            return False
        if atom.bound > r:
            return False
    return True


def _local_body(f: Formula, variables: tuple[str, ...], r: int) -> bool:
    if isinstance(f, Not):
        return _local_body(f.child, variables, r)
    if isinstance(f, (And, Or)):
        return all(_local_body(c, variables, r) for c in f.children)
    if isinstance(f, Exists):
        g = _guard_of_exists(f.body)
        return (
            g is not None
            and _is_guard_for(g, variables, f.var, r)
            and all(_local_body(c, variables, r) for c in f.body.children[1:])
        )
    if isinstance(f, Forall):
        g = _guard_of_forall(f.body)
        return (
            g is not None
            and _is_guard_for(g, variables, f.var, r)
            and all(_local_body(c, variables, r) for c in f.body.children[1:])
        )
    return True


def is_syntactically_local(t: HypothesisTemplate, r: int) -> bool:
    """True iff every quantifier is guarded to distance <= r of all template variables."""
    return _local_body(t.body, t.variables, r)


def _fresh_names(taken: set[str], count: int, stem: str = "y") -> list[str]:
    names = []
    i = 1
    while len(names) < count:
        cand = f"{stem}{i}"
        if cand not in taken:
            names.append(cand)
            taken.add(cand)
        i += 1
    return names


def _bound_vars(f: Formula) -> set[str]:
    if isinstance(f, (Exists, Forall)):
        return {f.var} | _bound_vars(f.body)
    if isinstance(f, Not):
        return _bound_vars(f.child)
    if isinstance(f, (And, Or)):
        return set().union(*(_bound_vars(c) for c in f.children))
    return set()


def _pad_body(f: Formula, full: tuple[str, ...], r: int) -> Formula:
    if isinstance(f, Not):
        return Not(_pad_body(f.child, full, r))
    if isinstance(f, And):
        return And(tuple(_pad_body(c, full, r) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(_pad_body(c, full, r) for c in f.children))
    if isinstance(f, Exists):
        old = f.body.children
        rest = tuple(_pad_body(c, full, r) for c in old[1:])
        return Exists(f.var, And((distance_guard(full, f.var, r), old[0]) + rest))
    if isinstance(f, Forall):
        old = f.body.children
        rest = tuple(_pad_body(c, full, r) for c in old[1:])
        return Forall(f.var, Or((Not(distance_guard(full, f.var, r)), old[0]) + rest))
    return f


def pad_parameters(t: HypothesisTemplate, ell: int, r: int) -> HypothesisTemplate:
    """Extend the parameter list to length ``ell`` with variables the formula ignores.

    Each guard is widened to the new variable list and conjoined with the old
    guard, so the result stays syntactically r-local and has the same meaning.
    """
    m = t.ell
    if m > ell:
        raise ValueError(f"template already has {m} parameters, cannot pad to {ell}")
    if m == ell:
        return t
    if not is_syntactically_local(t, r):
        raise ValueError(f"template is not syntactically {r}-local")
    taken = set(t.variables) | _bound_vars(t.body)
    extra = tuple(_fresh_names(taken, ell - m))
    params = t.parameter_vars + extra
    body = _pad_body(t.body, t.instance_vars + params, r)
    return HypothesisTemplate(t.instance_vars, params, body, name=t.name)


# -- bounded enumeration -----------------------------------------------------


def default_variables(k: int, ell: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    xs = ("x",) if k == 1 else tuple(f"x{i}" for i in range(1, k + 1))
    ys = tuple(f"y{j}" for j in range(1, ell + 1))
    return xs, ys


def atoms_over(vocab: Vocabulary, variables: Sequence[str]) -> list[Formula]:
    """All equality and relation atoms over ``variables`` in canonical order."""
    atoms: list[Formula] = [Equality(a, b) for a, b in combinations(variables, 2)]
    for name, arity in vocab.symbols:
        atoms.extend(RelationAtom(name, args) for args in product(variables, repeat=arity))
    return atoms


def _depends_on_all(table: int, s: int) -> bool:
    for i in range(s):
        for row in range(1 << s):
            if not row >> i & 1:
                if (table >> row & 1) != (table >> (row | 1 << i) & 1):
                    break
        else:
            return False
    return True


def formula_from_table(atoms: Sequence[Formula], table: int) -> Formula:
    """DNF for the Boolean function of ``atoms`` whose row ``i`` value is bit ``i`` of ``table``."""
    s = len(atoms)
    rows = [row for row in range(1 << s) if table >> row & 1]
    if not rows:
        return FALSE
    if len(rows) == 1 << s:
        return TRUE
    if s == 1:
        return atoms[0] if rows == [1] else Not(atoms[0])
    terms = []
    for row in rows:
        lits = tuple(atoms[i] if row >> i & 1 else Not(atoms[i]) for i in range(s))
        terms.append(And(lits))
    return terms[0] if len(terms) == 1 else Or(tuple(terms))


def enumerate_bounded_space(
    vocab: Vocabulary, k: int, ell: int, max_atoms: int, cap: int
) -> list[HypothesisTemplate]:
    """Quantifier-free templates, one per Boolean function of at most ``max_atoms`` atoms.

    Order: the two constants, then atom sets by size and position, and within
    one atom set the functions depending on every atom by truth-table value.
    Two templates never denote the same Boolean function of the atoms.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    xs, ys = default_variables(k, ell)
    atoms = atoms_over(vocab, xs + ys)
    out: list[HypothesisTemplate] = []

    def gen() -> Iterator[Formula]:
        yield FALSE
        yield TRUE
        for s in range(1, max_atoms + 1):
            for chosen in combinations(atoms, s):
                for table in range(1 << (1 << s)):
                    if _depends_on_all(table, s):
                        yield formula_from_table(chosen, table)

    for body in gen():
        out.append(HypothesisTemplate(xs, ys, body))
        if len(out) >= cap:
            break
    return out
