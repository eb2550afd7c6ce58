"""Brute-force reference searches used to certify the learners on small instances.

Everything here evaluates formulas on the whole structure with ``models``;
nothing goes through balls or the local-access oracle, so agreement with the
learners is a genuine cross-check of locality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .evaluation import _holds
from .hypotheses import FormulaHyp
from .learn import ExplicitFormulas, TrainingSequence
from .logic import And, DistAtom, Exists, Forall, HypothesisTemplate, Not, Or
from .structure import RelStructure

DEFAULT_BUDGET = 2_000_000
DEFAULT_DOMAIN_LIMIT = 100_000


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SearchReport:
    found: tuple[FormulaHyp, tuple[str, ...]] | None
    candidates_checked: int
    min_error: Fraction


def _templates(space) -> tuple[HypothesisTemplate, ...]:
    return space.templates if isinstance(space, ExplicitFormulas) else tuple(space)


def _grid(s: RelStructure, space, k: int, ell: int, candidates, budget: int):
    templates = _templates(space)
    for t in templates:
        if t.k != k or t.ell != ell:
            raise ValueError(f"template {t} does not have {k} instance and {ell} parameter variables")
    pool = s.sorted_universe if candidates is None else tuple(sorted(candidates))
    for p in pool:
        s.check_element(p)
    size = len(pool) ** ell * len(templates)
    if size > budget:
        raise BudgetExceeded(f"{size} candidates exceed the budget of {budget}")
    return templates, pool


def _value(s: RelStructure, t: HypothesisTemplate, tup: tuple, params: tuple) -> bool:
    return _holds(s, t.body, dict(zip(t.variables, tup + params)))


def _hyp(t: HypothesisTemplate, params, idx: int) -> FormulaHyp:
    return FormulaHyp(t, params, radius=_guard_radius(t), provenance={"space_index": idx, "params": list(params)})


def _guard_radius(t: HypothesisTemplate) -> int:
    """Largest distance bound in the body; for relativised templates, their radius."""
    best = 0
    stack = [t.body]
    while stack:
        f = stack.pop()
        if isinstance(f, DistAtom):
            best = max(best, f.bound)
        elif isinstance(f, (And, Or)):
            stack.extend(f.children)
        elif isinstance(f, Not):
            stack.append(f.child)
        elif isinstance(f, (Exists, Forall)):
            stack.append(f.body)
    return best


def exhaustive_consistent(
    s: RelStructure,
    T: TrainingSequence,
    space,
    k: int,
    ell: int,
    candidates: Iterable[str] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> SearchReport:
    """First (params, template) in canonical order consistent with ``T``."""
    templates, pool = _grid(s, space, k, ell, candidates, budget)
    checked = 0
    for params in product(pool, repeat=ell):
        for idx, t in enumerate(templates):
            checked += 1
            if all(_value(s, t, tup, params) == bool(label) for tup, label in T):
                return SearchReport((_hyp(t, params, idx), params), checked, Fraction(0))
    return SearchReport(None, checked, Fraction(1) if len(T) else Fraction(0))


def exhaustive_min_error(
    s: RelStructure,
    T: TrainingSequence,
    space,
    k: int,
    ell: int,
    candidates: Iterable[str] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> SearchReport:
    """Global minimum training error over the grid; ties go to the canonical-first pair."""
    if not len(T):
        raise ValueError("training sequence is empty")
    templates, pool = _grid(s, space, k, ell, candidates, budget)
    checked = 0
    best = None
    best_err = len(T) + 1
    for params in product(pool, repeat=ell):
        for idx, t in enumerate(templates):
            checked += 1
            err = sum(1 for tup, label in T if _value(s, t, tup, params) != bool(label))
            if err < best_err:
                best_err = err
                best = (_hyp(t, params, idx), params)
    if best is None:
        return SearchReport(None, checked, Fraction(1))
    return SearchReport(best, checked, Fraction(best_err, len(T)))


def concept_table(s: RelStructure, t: HypothesisTemplate, params: Sequence[str], domain) -> tuple[int, ...]:
    params = tuple(params)
    return tuple(int(_value(s, t, tup, params)) for tup in domain)


def enumerate_concept_bitvectors(
    s: RelStructure, space, k: int, ell: int, limit: int = DEFAULT_DOMAIN_LIMIT
) -> list[tuple[int, ...]]:
    """Distinct truth tables over U^k (canonical order) of all (template, params) concepts.

    Order is first appearance, scanning parameters outer and templates inner.
    """
    templates = _templates(space)
    universe = s.sorted_universe
    if len(universe) ** k > limit:
        raise BudgetExceeded(f"domain of {len(universe) ** k} tuples exceeds the limit of {limit}")
    domain = list(product(universe, repeat=k))
    seen: dict[tuple[int, ...], None] = {}
    for params in product(universe, repeat=ell):
        for t in templates:
            if t.k != k or t.ell != ell:
                raise ValueError(f"template {t} does not have {k} instance and {ell} parameter variables")
            seen.setdefault(concept_table(s, t, params, domain), None)
    return list(seen)
