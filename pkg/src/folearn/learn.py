"""The consistent learner and the training-error minimiser.

Both search parameter tuples drawn from N_{2*ell*r_star}(T) and, for each, the
hypothesis space in its canonical order, evaluating every candidate only on
the balls around training tuple + parameters. The first consistent candidate
(or the first one with strictly minimal error) wins.

Two spaces are supported. ``ExplicitFormulas`` is a user-supplied list of
templates, relativised to ``r_star``. ``RealizedTypes`` classifies by local
type: for fixed parameters, a tuple is accepted iff its local type is the
type of some positive example (the disjunction-of-types hypothesis).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence, Union

from .evaluation import (
    QueryView,
    _holds,
    default_type_depth,
    evaluation_radius,
    hyp_value,
    local_type_of_view,
    template_assignment,
)
from .hypotheses import FormulaHyp, Hypothesis, Reject, TypeHyp
from .logic import HypothesisTemplate, pad_parameters, parse_formula, relativize
from .structure import CachedAccess, RelStructure, ball, neighbourhood


class TrainingDocumentError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    """Learner parameters. Unset ``q_star``, ``r_star`` and ``q_t`` get defaults.

    ``r_star`` defaults to ``7**q``, a conventional stand-in for a Gaifman
    radius (the true constant is not computed); ``q_star`` defaults to ``q``.
    """

    k: int
    ell: int
    q: int = 1
    q_star: int | None = None
    r_star: int | None = None
    q_t: int | None = None

    def __post_init__(self):
        if self.q_star is None:
            object.__setattr__(self, "q_star", self.q)
        if self.r_star is None:
            object.__setattr__(self, "r_star", 7**self.q)
        if self.q_t is None:
            object.__setattr__(self, "q_t", default_type_depth(self.q_star, self.r_star))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.ell < 0 or self.q < 0 or self.r_star < 0:
            raise ValueError("ell, q and r_star must be non-negative")
        if self.q_t < self.q_star:
            raise ValueError("q_t must be at least q_star")


@dataclass(frozen=True)
class TrainingSequence:
    examples: tuple[tuple[tuple[str, ...], int], ...]
    k: int | None = None

    def __post_init__(self):
        examples = tuple((tuple(tup), int(label)) for tup, label in self.examples)
        object.__setattr__(self, "examples", examples)
        lengths = {len(tup) for tup, _ in examples}
        if self.k is None:
            object.__setattr__(self, "k", lengths.pop() if len(lengths) == 1 else None)
            lengths = set()
        if lengths - {self.k}:
            raise TrainingDocumentError(f"training tuples must all have length {self.k}")
        for _, label in examples:
            if label not in (0, 1):
                raise TrainingDocumentError(f"labels must be 0 or 1, got {label}")

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def validate(self, s: RelStructure) -> None:
        for tup, _ in self.examples:
            for u in tup:
                s.check_element(u)

    def to_doc(self) -> dict:
        return {
            "k": self.k,
            "examples": [{"tuple": list(tup), "label": label} for tup, label in self.examples],
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> TrainingSequence:
        if set(doc) != {"k", "examples"}:
            raise TrainingDocumentError(f"training document needs exactly 'k' and 'examples', got {sorted(doc)}")
        try:
            examples = [(tuple(e["tuple"]), e["label"]) for e in doc["examples"]]
        except (KeyError, TypeError) as exc:
            raise TrainingDocumentError(f"malformed example: {exc}") from exc
        return cls(tuple(examples), k=int(doc["k"]))


def load_training_file(path) -> TrainingSequence:
    with open(path, encoding="utf-8") as fh:
        return TrainingSequence.from_doc(json.load(fh))


@dataclass(frozen=True)
class ExplicitFormulas:
    templates: tuple[HypothesisTemplate, ...]

    @classmethod
    def build(cls, templates: Iterable[HypothesisTemplate | str], r_star: int, ell: int | None = None):
        """Relativise each template to ``r_star`` (and pad its parameters up to ``ell``)."""
        out = []
        for t in templates:
            if isinstance(t, str):
                t = parse_formula(t)
            t = relativize(t, r_star)
            if ell is not None and t.ell < ell:
                t = pad_parameters(t, ell, r_star)
            out.append(t)
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.templates)


@dataclass(frozen=True)
class RealizedTypes:
    q_t: int
    r_star: int


HypothesisSpace = Union[ExplicitFormulas, RealizedTypes]


def parameter_candidates(oracle, T: TrainingSequence, cfg: LearnerConfig) -> list[str]:
    """N_{2*ell*r_star}(T) in canonical order."""
    radius = 2 * cfg.ell * cfg.r_star
    found: set[str] = set()
    for tup, _ in T:
        found |= neighbourhood(oracle, tup, radius)
    return sorted(found)


class _Views:
    """Lazily built balls around training tuple + parameters, for one parameter choice."""

    def __init__(self, access, params: tuple[str, ...]):
        self.access = access
        self.params = params
        self._cache: dict[tuple, RelStructure] = {}
        self._atoms = QueryView(access)

    def get(self, tup: tuple[str, ...], radius: int) -> RelStructure:
        if radius == 0:
            # quantifier-free and distance-free: relation queries on the tuple suffice
            return self._atoms
        key = (tup, radius)
        view = self._cache.get(key)
        if view is None:
            view = self._cache[key] = ball(self.access, tup + self.params, radius).view
        return view


def _check_space(space: HypothesisSpace, cfg: LearnerConfig) -> None:
    if isinstance(space, ExplicitFormulas):
        for t in space.templates:
            if t.k != cfg.k or t.ell != cfg.ell:
                raise ValueError(f"template {t} does not have {cfg.k} instance and {cfg.ell} parameter variables")


def _formula_hyp(space: ExplicitFormulas, idx: int, params, cfg: LearnerConfig, **extra) -> FormulaHyp:
    return FormulaHyp(
        space.templates[idx], params, cfg.r_star, provenance={"space_index": idx, "params": list(params), **extra}
    )


def learn_consistent(oracle, T: TrainingSequence, space: HypothesisSpace, cfg: LearnerConfig) -> Hypothesis | Reject:
    """Return the first hypothesis (canonical order) consistent with ``T``, else ``Reject``."""
    _check_space(space, cfg)
    access = CachedAccess(oracle)
    N = parameter_candidates(access, T, cfg)
    examples = T.examples
    if isinstance(space, RealizedTypes):
        types = _TypeCache(access, space)
        for params in product(N, repeat=cfg.ell):
            seen: dict[bytes, int] = {}
            for tup, label in examples:
                if seen.setdefault(types.digest(tup, params), label) != label:
                    break
            else:
                accepted = frozenset(key for key, label in seen.items() if label == 1)
                return TypeHyp(accepted, params, space.q_t, space.r_star, provenance={"params": list(params)})
        return Reject("no parameter tuple separates the labels by local type")

    radii = [evaluation_radius(t, cfg.r_star) for t in space.templates]
    for params in product(N, repeat=cfg.ell):
        views = _Views(access, params)
        for idx, tmpl in enumerate(space.templates):
            body, radius = tmpl.body, radii[idx]
            for tup, label in examples:
                asg = template_assignment(tmpl, tup, params)
                if _holds(views.get(tup, radius), body, asg) != bool(label):
                    break
            else:
                return _formula_hyp(space, idx, params, cfg)
    if not N and cfg.ell > 0:
        return Reject("no parameter candidates: the training sequence is empty")
    return Reject("no hypothesis in the space is consistent with the training sequence")


def learn_min_error(oracle, T: TrainingSequence, space: HypothesisSpace, cfg: LearnerConfig) -> Hypothesis:
    """Return the first hypothesis (canonical order) of minimum training error.

    A candidate is abandoned as soon as its running error count reaches the
    best count so far; it could not replace the incumbent anyway, since only
    strict improvements are taken.
    """
    if not len(T):
        raise ValueError("training sequence is empty")
    _check_space(space, cfg)
    access = CachedAccess(oracle)
    N = parameter_candidates(access, T, cfg)
    examples = T.examples
    best: Hypothesis | None = None
    minerr = len(examples) + 1

    if isinstance(space, RealizedTypes):
        types = _TypeCache(access, space)
        for params in product(N, repeat=cfg.ell):
            counts: dict[bytes, list[int]] = {}
            err = 0
            for tup, label in examples:
                c = counts.setdefault(types.digest(tup, params), [0, 0])
                before = min(c)
                c[label] += 1
                err += min(c) - before
                if err >= minerr:
                    break
            if err < minerr:
                minerr = err
                accepted = frozenset(key for key, (zeros, ones) in counts.items() if ones > zeros)
                best = TypeHyp(
                    accepted, params, space.q_t, space.r_star, provenance={"params": list(params), "errors": err}
                )
        return best

    radii = [evaluation_radius(t, cfg.r_star) for t in space.templates]
    for params in product(N, repeat=cfg.ell):
        views = _Views(access, params)
        for idx, tmpl in enumerate(space.templates):
            body, radius = tmpl.body, radii[idx]
            err = 0
            for tup, label in examples:
                asg = template_assignment(tmpl, tup, params)
                if _holds(views.get(tup, radius), body, asg) != bool(label):
                    err += 1
                    if err >= minerr:
                        break
            if err < minerr:
                minerr = err
                best = _formula_hyp(space, idx, params, cfg, errors=err)
    if best is None:
        raise ValueError("no parameter candidates: the training sequence is empty")
    return best


class _TypeCache:
    def __init__(self, access, space: RealizedTypes):
        self.access = access
        self.space = space
        self._digests: dict[tuple, bytes] = {}

    def digest(self, tup: tuple[str, ...], params: tuple[str, ...]) -> bytes:
        full = tup + params
        d = self._digests.get(full)
        if d is None:
            view = ball(self.access, full, self.space.r_star).view
            d = self._digests[full] = local_type_of_view(view, full, self.space.q_t, self.space.r_star).digest
        return d


def training_error(oracle, h: Hypothesis, T: TrainingSequence) -> Fraction:
    if not len(T):
        raise ValueError("training sequence is empty")
    wrong = sum(1 for tup, label in T if hyp_value(oracle, h, tup) != label)
    return Fraction(wrong, len(T))


def build_type_hypothesis(
    oracle, T: TrainingSequence, params: Sequence[str], cfg: LearnerConfig
) -> tuple[TypeHyp, bool, Fraction]:
    """The disjunction-of-types hypothesis for fixed parameters, with its consistency and error."""
    params = tuple(params)
    if len(params) != cfg.ell:
        raise ValueError(f"expected {cfg.ell} parameters, got {len(params)}")
    types = _TypeCache(CachedAccess(oracle), RealizedTypes(cfg.q_t, cfg.r_star))
    counts: dict[bytes, list[int]] = {}
    for tup, label in T:
        counts.setdefault(types.digest(tup, params), [0, 0])[label] += 1
    consistent = all(min(c) == 0 for c in counts.values())
    wrong = sum(min(c) for c in counts.values())
    accepted = frozenset(key for key, (zeros, ones) in counts.items() if ones > zeros)
    h = TypeHyp(accepted, params, cfg.q_t, cfg.r_star, provenance={"params": list(params)})
    err = Fraction(wrong, len(T)) if len(T) else Fraction(0)
    return h, consistent, err
