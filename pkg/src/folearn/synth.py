"""Seeded generators: bounded-degree structures, planted targets, training data."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from itertools import product
from typing import Sequence

from .distributions import LabeledWeighted, trial_rng
from .evaluation import hyp_value
from .hypotheses import FormulaHyp, Hypothesis
from .learn import TrainingSequence
from .logic import HypothesisTemplate, relativize
from .structure import LocalAccessOracle, RelStructure, Vocabulary, load_structure

FAMILIES = ("random", "cycle_with_colors", "grid_strip", "figure1_fixture")
GRAPH_VOCABULARY = Vocabulary.of({"E": 2, "R": 1})
COLOR_PERIOD = 10


@dataclass(frozen=True)
class GenSpec:
    n: int
    d_max: int
    family: str = "random"
    color_density: Fraction = Fraction(1, 2)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "color_density", Fraction(self.color_density))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.d_max < 0:
            raise ValueError("d_max must be non-negative")
        if not 0 <= self.color_density <= 1:
            raise ValueError("color_density must lie in [0, 1]")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")


def element_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"v{i:0{width}d}" for i in range(n)]


def figure1_structure() -> RelStructure:
    text = resources.files("folearn").joinpath("data", "figure1.json").read_text(encoding="utf-8")
    return load_structure(text)


class _CappedGraph:
    """Directed E-edges under a cap on the Gaifman (undirected) degree."""

    def __init__(self, n: int, d_max: int):
        self.d_max = d_max
        self.nbrs = [set() for _ in range(n)]
        self.edges: list[tuple[int, int]] = []

    def add(self, i: int, j: int) -> bool:
        if i == j or j in self.nbrs[i]:
            return False
        if len(self.nbrs[i]) >= self.d_max or len(self.nbrs[j]) >= self.d_max:
            return False
        self.nbrs[i].add(j)
        self.nbrs[j].add(i)
        self.edges.append((i, j))
        return True


def gen_structure(spec: GenSpec) -> RelStructure:
    """Structure over {E/2, R/1} whose Gaifman degree never exceeds ``d_max``."""
    if spec.family == "figure1_fixture":
        return figure1_structure()
    rng = trial_rng(spec.seed)
    n = spec.n
    names = element_names(n)
    g = _CappedGraph(n, spec.d_max)
    density = float(spec.color_density)

    if spec.family == "random":
        for _ in range(n * spec.d_max):
            i, j = (int(x) for x in rng.integers(0, n, size=2))
            g.add(i, j)
        colored = [i for i in range(n) if rng.random() < density]
    elif spec.family == "cycle_with_colors":
        for i in range(n):
            g.add(i, (i + 1) % n)
        pattern = [rng.random() < density for _ in range(COLOR_PERIOD)]
        colored = [i for i in range(n) if pattern[i % COLOR_PERIOD]]
    else:  # grid_strip: a ladder, rungs (2i, 2i+1) and rails (i, i+2)
        for i in range(n):
            if i % 2 == 0 and i + 1 < n:
                g.add(i, i + 1)
            if i + 2 < n:
                g.add(i, i + 2)
        colored = [i for i in range(n) if rng.random() < density]

    relations = {
        "E": [(names[i], names[j]) for i, j in g.edges],
        "R": [(names[i],) for i in colored],
    }
    return RelStructure(GRAPH_VOCABULARY, names, relations)


def plant_target(
    s: RelStructure,
    template: HypothesisTemplate,
    seed: int,
    r_star: int,
    params: Sequence[str] | None = None,
) -> FormulaHyp:
    """The relativised template with uniformly drawn (or forced) parameters."""
    t = relativize(template, r_star)
    if params is None:
        universe = s.sorted_universe
        idx = trial_rng(seed).integers(0, len(universe), size=t.ell)
        params = tuple(universe[int(i)] for i in idx)
    for p in params:
        s.check_element(p)
    return FormulaHyp(t, tuple(params), r_star, provenance={"planted": True})


def _universe_of(oracle) -> tuple[str, ...]:
    # Sampling is done by the environment, which may see the whole universe.
    backing = oracle.backing if isinstance(oracle, LocalAccessOracle) else oracle
    return backing.sorted_universe


def sample_training(oracle, target: Hypothesis, dist, t: int, seed: int) -> TrainingSequence:
    """``t`` i.i.d. draws from ``dist`` labelled by ``target``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if isinstance(oracle, RelStructure):
        oracle = LocalAccessOracle(oracle)
    tuples = dist.sample(trial_rng(seed), _universe_of(oracle), t)
    return TrainingSequence(tuple((tup, hyp_value(oracle, target, tup)) for tup in tuples), k=dist.k)


def sample_labeled(dist: LabeledWeighted, t: int, seed: int) -> TrainingSequence:
    return TrainingSequence(tuple(dist.sample(trial_rng(seed), (), t)), k=dist.k)


def noisy_distribution(oracle, target: Hypothesis, noise: Fraction, k: int | None = None) -> LabeledWeighted:
    """Uniform tuples, labelled by ``target`` but flipped with probability ``noise``."""
    noise = Fraction(noise)
    if not 0 <= noise <= Fraction(1, 2):
        raise ValueError("noise must lie in [0, 1/2]")
    if isinstance(oracle, RelStructure):
        oracle = LocalAccessOracle(oracle)
    k = target.k if k is None else k
    items = []
    for tup in product(_universe_of(oracle), repeat=k):
        label = hyp_value(oracle, target, tup)
        items.append((tup, label, 1 - noise))
        if noise > 0:
            items.append((tup, 1 - label, noise))
    return LabeledWeighted(tuple(items))
