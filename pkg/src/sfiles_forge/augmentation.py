"""Non-canonical SFILES variants of a flowsheet: counting, enumeration, sampling."""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass

from .graph import FlowsheetGraph
from .parser import parse
from .serializer import MAX_SEED, decision_space

ENUMERATION_LIMIT = 10_000


class VariantLimitError(ValueError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"{count} variants exceed the enumeration limit of {limit}")
        self.count = count
        self.limit = limit


@dataclass(frozen=True)
class AugmentationConfig:
    max_augmentations: int = 5
    seed: int = 0
    include_canonical: bool = False

    def __post_init__(self):
        if self.max_augmentations < 1:
            raise ValueError("max_augmentations must be at least 1")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class AugmentationSet:
    canonical: str
    variants: tuple[str, ...]

    def lines(self, include_canonical: bool = False) -> list[str]:
        return ([self.canonical] if include_canonical else []) + list(self.variants)


def count_variants(g: FlowsheetGraph) -> int:
    """Number of distinct SFILES strings for ``g``, canonical included.

    Each unit with ``b`` outlets contributes the number of distinct outlet
    orders (``b!`` when no two outlet subtrees are interchangeable), doubled
    when it also emits recycles: the last outlet may then be printed with or
    without brackets.
    """
    return decision_space(g).size


def enumerate_variants(g: FlowsheetGraph, limit: int = ENUMERATION_LIMIT) -> list[str]:
    """All SFILES strings of ``g``; the canonical string comes first."""
    space = decision_space(g)
    if space.size > limit:
        raise VariantLimitError(space.size, limit)
    return [space.render(i) for i in range(space.size)]


def _sample_indices(rng: random.Random, population: int, k: int) -> list[int]:
    """k distinct indices from [1, population)."""
    if population - 1 <= sys.maxsize:
        return rng.sample(range(1, population), k)
    # too large for range(); collisions are astronomically unlikely but handled
    seen: dict[int, None] = {}
    while len(seen) < k:
        seen.setdefault(rng.randrange(1, population))
    return list(seen)


def augment_graph(g: FlowsheetGraph, cfg: AugmentationConfig) -> AugmentationSet:
    space = decision_space(g)
    available = space.size - 1
    if available <= cfg.max_augmentations:
        indices = list(range(1, space.size))
    else:
        indices = sorted(_sample_indices(random.Random(cfg.seed), space.size, cfg.max_augmentations))
    return AugmentationSet(space.render(0), tuple(space.render(i) for i in indices))


def augment(text: str, cfg: AugmentationConfig | None = None) -> AugmentationSet:
    """Up to ``cfg.max_augmentations`` distinct non-canonical strings for ``text``."""
    return augment_graph(parse(text), cfg or AugmentationConfig())
