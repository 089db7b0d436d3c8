"""Sampling of small connected statement windows from a story.

Two statements are connected when they share at least one argument symbol; a
sameAs statement is additionally linked, through its label, to the statements
that use the label as an argument. Windows grow from a uniformly random seed
statement by repeatedly adding a uniformly random frontier statement, so the
result is always connected and never exceeds the seed's component.
"""

from __future__ import annotations

import random
from collections import defaultdict
from itertools import combinations

from .corpus import Statement, Story


class WindowError(ValueError):
    """Window sampling cannot proceed (empty story, bad size)."""


class StoryGraph:
    """Statement adjacency for one story, built once and reused for sampling."""

    def __init__(self, story: Story):
        self.story = story
        self.statements = story.statements
        by_symbol: dict[str, list[int]] = defaultdict(list)
        for i, s in enumerate(self.statements):
            for sym in s.symbols():
                by_symbol[sym].append(i)
        adjacency: list[set[int]] = [set() for _ in self.statements]
        for ids in by_symbol.values():
            for a, b in combinations(ids, 2):
                adjacency[a].add(b)
                adjacency[b].add(a)
        self.adjacency: tuple[frozenset[int], ...] = tuple(
            frozenset(a) for a in adjacency
        )

    def component_of(self, index: int) -> frozenset[int]:
        seen = {index}
        queue = [index]
        while queue:
            for nxt in self.adjacency[queue.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return frozenset(seen)


def sample_window_indices(
    graph: StoryGraph, window_size: int, rng: random.Random
) -> frozenset[int]:
    if not graph.statements:
        raise WindowError(f"story {graph.story.name!r} is empty")
    if window_size < 1:
        raise WindowError("window_size must be >= 1")
    start = rng.randrange(len(graph.statements))
    chosen = {start}
    frontier = set(graph.adjacency[start])
    while len(chosen) < window_size and frontier:
        ordered = sorted(frontier)
        nxt = ordered[rng.randrange(len(ordered))]
        chosen.add(nxt)
        frontier.discard(nxt)
        frontier |= graph.adjacency[nxt] - chosen
    return frozenset(chosen)


def sample_window(
    graph: StoryGraph, window_size: int, rng: random.Random
) -> tuple[Statement, ...]:
    """A connected window of at most ``window_size`` statements."""
    indices = sample_window_indices(graph, window_size, rng)
    return tuple(graph.statements[i] for i in sorted(indices))
