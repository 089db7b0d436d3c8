"""Linear content-overlap retrieval baseline.

Scans every stored story bag for each probe, so its comparison count is the
store size by construction. Score is raw intersection size (binary dot
product); Jaccard is available behind a flag for sensitivity checks.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

Bag = frozenset[str]


@dataclass
class BaselineStore:
    bags: dict[str, Bag]


@dataclass(frozen=True)
class LinearRetrieval:
    ranked: tuple[tuple[str, float], ...]
    comparisons: int

    @property
    def stories(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.ranked)


def build_store(story_bags: Mapping[str, Iterable[str]]) -> BaselineStore:
    return BaselineStore({name: frozenset(bag) for name, bag in story_bags.items()})


def linear_retrieve(
    probe: Iterable[str], store: BaselineStore, k: int = 3, jaccard: bool = False
) -> LinearRetrieval:
    """Top-k stored stories by bag overlap; ties break by name."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not store.bags:
        raise ValueError("baseline store is empty")
    probe = frozenset(probe)
    scored = []
    for name in sorted(store.bags):
        bag = store.bags[name]
        inter = len(probe & bag)
        if jaccard:
            union = len(probe | bag)
            score = inter / union if union else 0.0
        else:
            score = float(inter)
        scored.append((name, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return LinearRetrieval(tuple(scored[:k]), comparisons=len(store.bags))
