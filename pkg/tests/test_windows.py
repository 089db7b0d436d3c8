from __future__ import annotations

import random
from collections import Counter

import pytest

from spontol import StoryGraph, WindowError, parse_corpus, sample_window
from spontol.rng import derive_rng
from spontol.windows import sample_window_indices

CHAIN = "story chain\n" + "\n".join(f"rel{i} e{i} e{i+1}" for i in range(10)) + "\n"

TWO_COMPONENTS = """
story two
a X Y
b Y Z
c P Q
d Q R
e R S
"""


def graph_of(text: str) -> StoryGraph:
    return StoryGraph(parse_corpus(text).stories[0])


def test_small_story_yields_whole_component():
    graph = graph_of("story s\na X Y\nb Y Z\nc Z W\nd W V\ne V U\n")
    window = sample_window(graph, 20, random.Random(0))
    assert len(window) == 5


def test_window_size_one_is_single_statement():
    graph = graph_of(CHAIN)
    window = sample_window(graph, 1, random.Random(3))
    assert len(window) == 1


def test_fixed_seed_reproducible():
    graph = graph_of(CHAIN)
    a = sample_window(graph, 4, derive_rng(9, "w", "chain", 0))
    b = sample_window(graph, 4, derive_rng(9, "w", "chain", 0))
    assert a == b
    c = sample_window(graph, 4, derive_rng(9, "w", "chain", 1))
    assert isinstance(c, tuple)


def test_windows_always_connected():
    graph = graph_of(CHAIN)
    index_of = {s: i for i, s in enumerate(graph.statements)}
    for seed in range(50):
        window = sample_window(graph, 4, random.Random(seed))
        indices = {index_of[s] for s in window}
        # connected iff BFS from one member inside the subset reaches all
        start = next(iter(indices))
        seen = {start}
        queue = [start]
        while queue:
            for n in graph.adjacency[queue.pop()]:
                if n in indices and n not in seen:
                    seen.add(n)
                    queue.append(n)
        assert seen == indices


def test_window_capped_by_component_size():
    graph = graph_of(TWO_COMPONENTS)
    sizes = set()
    for seed in range(40):
        window = sample_window(graph, 10, random.Random(seed))
        sizes.add(len(window))
    assert sizes == {2, 3}  # the two components have 2 and 3 statements


def test_labels_link_statements():
    graph = graph_of("story s\nsameAs m (fail A)\nblame B m\n")
    assert len(sample_window(graph, 2, random.Random(0))) == 2


def test_coverage_every_statement_sampled():
    graph = graph_of(CHAIN)
    counts = Counter()
    for i in range(300):
        for idx in sample_window_indices(graph, 3, random.Random(i)):
            counts[idx] += 1
    assert len(counts) == len(graph.statements)
    assert min(counts.values()) > 0


def test_empty_story_rejected():
    class FakeStory:
        name = "empty"
        statements = ()

    with pytest.raises(WindowError):
        sample_window_indices(StoryGraph(FakeStory()), 3, random.Random(0))


def test_bad_window_size_rejected():
    graph = graph_of(CHAIN)
    with pytest.raises(WindowError):
        sample_window(graph, 0, random.Random(0))
