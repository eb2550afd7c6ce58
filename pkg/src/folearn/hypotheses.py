"""Hypothesis values and their JSON documents."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from .logic import HypothesisTemplate, TRUE, FALSE, parse_formula, render_template, default_variables


class HypothesisDocumentError(ValueError):
    pass


@dataclass(frozen=True)
class FormulaHyp:
    """``[[template(x; params)]]`` evaluated inside the radius-``radius`` ball."""

    template: HypothesisTemplate
    params: tuple[str, ...]
    radius: int
    provenance: Mapping = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if len(self.params) != self.template.ell:
            raise ValueError(f"template takes {self.template.ell} parameters, got {len(self.params)}")

    @property
    def k(self) -> int:
        return self.template.k


@dataclass(frozen=True)
class TypeHyp:
    """Accepts a tuple iff the local type of tuple+params is accepted.

    ``accepted_keys`` holds SHA-256 digests of canonical type keys.
    """

    accepted_keys: frozenset[bytes]
    params: tuple[str, ...]
    q_t: int
    radius: int
    provenance: Mapping = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "accepted_keys", frozenset(self.accepted_keys))


Hypothesis = Union[FormulaHyp, TypeHyp]


@dataclass(frozen=True)
class Reject:
    """The learner's explicit 'no consistent hypothesis in my space' answer."""

    reason: str

    def __bool__(self) -> bool:
        return False


def constant_hypothesis(value: bool, k: int = 1) -> FormulaHyp:
    xs, _ = default_variables(k, 0)
    return FormulaHyp(HypothesisTemplate(xs, (), TRUE if value else FALSE), (), 0)


def hypothesis_to_doc(h: Hypothesis) -> dict:
    if isinstance(h, FormulaHyp):
        return {
            "kind": "formula",
            "template": render_template(h.template),
            "params": list(h.params),
            "radius": h.radius,
        }
    if isinstance(h, TypeHyp):
        return {
            "kind": "types",
            "q_t": h.q_t,
            "radius": h.radius,
            "params": list(h.params),
            "accepted_keys": sorted(key.hex() for key in h.accepted_keys),
        }
    raise TypeError(f"not a hypothesis: {h!r}")


def hypothesis_from_doc(doc: Mapping) -> Hypothesis:
    kind = doc.get("kind")
    try:
        if kind == "formula":
            _expect_keys(doc, {"kind", "template", "params", "radius"})
            return FormulaHyp(parse_formula(doc["template"]), tuple(doc["params"]), int(doc["radius"]))
        if kind == "types":
            _expect_keys(doc, {"kind", "q_t", "radius", "params", "accepted_keys"})
            keys = frozenset(bytes.fromhex(k) for k in doc["accepted_keys"])
            return TypeHyp(keys, tuple(doc["params"]), int(doc["q_t"]), int(doc["radius"]))
    except (KeyError, TypeError) as exc:
        raise HypothesisDocumentError(f"malformed hypothesis document: {exc}") from exc
    raise HypothesisDocumentError(f"unknown hypothesis kind {kind!r}")


def _expect_keys(doc: Mapping, keys: set[str]) -> None:
    if set(doc) != keys:
        raise HypothesisDocumentError(f"hypothesis document keys {sorted(doc)} != {sorted(keys)}")
