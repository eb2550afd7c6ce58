"""Instance distributions with seeded sampling and enumerable support."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np


class SupportTooLarge(ValueError):
    pass


DEFAULT_SUPPORT_LIMIT = 1_000_000


def trial_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for (seed, path); same inputs give the same stream."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def _weight(w) -> Fraction:
    # floats go through their shortest repr so 0.1 means 1/10
    f = Fraction(repr(w)) if isinstance(w, float) else Fraction(w)
    if f <= 0:
        raise ValueError(f"weights must be positive, got {w}")
    return f


@dataclass(frozen=True)
class UniformTuples:
    k: int

    def sample(self, rng: np.random.Generator, universe: Sequence[str], m: int) -> list[tuple[str, ...]]:
        idx = rng.integers(0, len(universe), size=(m, self.k))
        return [tuple(universe[i] for i in row) for row in idx]

    def support(self, universe: Sequence[str], limit: int = DEFAULT_SUPPORT_LIMIT):
        """(tuple, weight) pairs with exact rational weights."""
        size = len(universe) ** self.k
        if size > limit:
            raise SupportTooLarge(f"uniform support has {size} tuples, limit is {limit}")
        w = Fraction(1, size)
        return [(tup, w) for tup in product(universe, repeat=self.k)]


@dataclass(frozen=True)
class Weighted:
    items: tuple[tuple[tuple[str, ...], object], ...]

    def __post_init__(self):
        items = tuple((tuple(tup), _weight(w)) for tup, w in self.items)
        if not items:
            raise ValueError("empty distribution")
        object.__setattr__(self, "items", items)

    @property
    def k(self) -> int:
        return len(self.items[0][0])

    def _probs(self) -> np.ndarray:
        total = sum(w for _, w in self.items)
        return np.array([float(w / total) for _, w in self.items])

    def sample(self, rng: np.random.Generator, universe: Sequence[str], m: int) -> list[tuple[str, ...]]:
        idx = rng.choice(len(self.items), size=m, p=self._probs())
        return [self.items[i][0] for i in idx]

    def support(self, universe: Sequence[str] = (), limit: int = DEFAULT_SUPPORT_LIMIT):
        total = sum(w for _, w in self.items)
        return [(tup, w / total) for tup, w in self.items]


@dataclass(frozen=True)
class LabeledWeighted:
    """A distribution on (tuple, label) pairs, for agnostic learning."""

    items: tuple[tuple[tuple[str, ...], int, object], ...]

    def __post_init__(self):
        items = []
        for tup, label, w in self.items:
            if label not in (0, 1):
                raise ValueError(f"labels must be 0 or 1, got {label}")
            items.append((tuple(tup), int(label), _weight(w)))
        if not items:
            raise ValueError("empty distribution")
        object.__setattr__(self, "items", tuple(items))

    @property
    def k(self) -> int:
        return len(self.items[0][0])

    def sample(self, rng: np.random.Generator, universe: Sequence[str], m: int) -> list[tuple[tuple[str, ...], int]]:
        total = sum(w for _, _, w in self.items)
        p = np.array([float(w / total) for _, _, w in self.items])
        idx = rng.choice(len(self.items), size=m, p=p)
        return [(self.items[i][0], self.items[i][1]) for i in idx]

    def support(self, universe: Sequence[str] = (), limit: int = DEFAULT_SUPPORT_LIMIT):
        """(tuple, label, probability) triples."""
        total = sum(w for _, _, w in self.items)
        return [(tup, label, w / total) for tup, label, w in self.items]


Distribution = UniformTuples | Weighted | LabeledWeighted
