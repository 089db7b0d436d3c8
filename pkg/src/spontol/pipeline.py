"""Two-level pipeline: build window + schema ontologies, retrieve analogs.

Building draws ``num_windows`` connected windows per story, transforms each
into a feature bag, chunks all window bags into the window ontology, then
re-encodes every window bag by parsing it against that ontology. Each story
becomes the set union of its window parses' tokens (concept ids plus residual
atoms), and a second chunking pass over these story bags yields the schema
ontology. The instance index maps each schema concept to the training stories
that inherit from it.

Retrieval repeats the front half for a probe story (fresh window substreams),
parses the probe's story bag against the schema ontology, and returns the
matched schema concepts, optionally expanded to the training stories indexed
under them. The headline cost metric is the number of schema-level concept
scorings; window-level parse costs are tracked separately.
"""

from __future__ import annotations

import json
import os
import shutil
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

from .corpus import Corpus, Story
from .ontology import Bag, Ontology, ParseResult, chunk, parse
from .rng import content_id, derive_rng
from .transform import LabelCycleError, transform
from .windows import StoryGraph, sample_window_indices

MODEL_FORMAT = "spontol-model/1"


class PipelineError(ValueError):
    """Model building or retrieval cannot proceed."""


@dataclass(frozen=True)
class BuildParams:
    num_windows: int = 100
    window_size: int = 20
    theta: float = 0.5
    seed: int = 42


@dataclass
class BuildStats:
    stories: int
    sampled_windows: int
    unique_window_bags: int
    skipped_windows: int
    window_dl_raw: int
    window_dl: int
    window_concepts: int
    schema_dl_raw: int
    schema_dl: int
    schema_concepts: int
    window_parse_comparisons: int


@dataclass
class Model:
    window_ontology: Ontology
    schema_ontology: Ontology
    instance_index: dict[str, tuple[str, ...]]
    params: BuildParams
    story_names: tuple[str, ...]


@dataclass
class BuildResult:
    model: Model
    story_bags: dict[str, Bag]
    stats: BuildStats


@dataclass(frozen=True)
class Retrieval:
    schemas: frozenset[str]
    comparisons: int
    window_comparisons: int
    story_bag: Bag


@dataclass(frozen=True)
class InstanceRetrieval:
    stories: frozenset[str]
    schemas: frozenset[str]
    comparisons: int
    window_comparisons: int
    story_bag: Bag


def _story_window_bags(
    story: Story, params: BuildParams, stream: str
) -> tuple[list[tuple[Bag, int]], int, int]:
    """Unique (window bag, draw count) pairs for a story, plus sampled/skipped counts."""
    graph = StoryGraph(story)
    bag_cache: dict[frozenset[int], Bag | None] = {}
    bags: set[Bag] = set()
    weights: Counter[Bag] = Counter()
    skipped = 0
    for i in range(params.num_windows):
        rng = derive_rng(params.seed, stream, story.name, i)
        indices = sample_window_indices(graph, params.window_size, rng)
        if indices not in bag_cache:
            stmts = [graph.statements[j] for j in sorted(indices)]
            try:
                bag_cache[indices] = transform(stmts)
            except LabelCycleError:
                bag_cache[indices] = None
        bag = bag_cache[indices]
        if bag is None:
            skipped += 1
        elif bag:
            weights[bag] += 1
    ordered = sorted(weights, key=sorted)
    return [(bag, weights[bag]) for bag in ordered], params.num_windows, skipped


def build(corpus: Corpus, params: BuildParams | None = None) -> BuildResult:
    """Run the full two-level build over a corpus. Deterministic per seed."""
    params = params or BuildParams()
    if not corpus.stories:
        raise PipelineError("corpus is empty")

    per_story: dict[str, list[Bag]] = {}
    window_weights: Counter[Bag] = Counter()
    sampled = skipped = 0
    for story in corpus.stories:
        weighted, n, s = _story_window_bags(story, params, "build-window")
        sampled += n
        skipped += s
        per_story[story.name] = [bag for bag, _ in weighted]
        for bag, count in weighted:
            window_weights[bag] += count

    window_ids = {
        bag: content_id("w", tuple(sorted(bag))) for bag in window_weights
    }
    window_instances = {window_ids[bag]: bag for bag in window_weights}
    window_mult = {window_ids[bag]: count for bag, count in window_weights.items()}
    window_ontology = chunk(window_instances, multiplicities=window_mult)

    parse_cache: dict[Bag, ParseResult] = {}
    window_parse_comparisons = 0

    def parsed(bag: Bag) -> ParseResult:
        nonlocal window_parse_comparisons
        if bag not in parse_cache:
            result = parse(bag, window_ontology, params.theta)
            parse_cache[bag] = result
            window_parse_comparisons += result.comparisons
        return parse_cache[bag]

    story_bags: dict[str, Bag] = {}
    for story in corpus.stories:
        tokens: set[str] = set()
        for bag in per_story[story.name]:
            result = parsed(bag)
            # Include inherited window concepts so structure shared through a
            # common parent is visible to the schema-level chunker.
            tokens |= window_ontology.inherited_concepts(result.concepts_used)
            tokens |= result.additions
        story_bags[story.name] = frozenset(tokens)

    schema_ontology = chunk(story_bags)

    instance_index: dict[str, set[str]] = {}
    for name in story_bags:
        direct = schema_ontology.instance_concepts(name)
        for cid in schema_ontology.inherited_concepts(direct):
            instance_index.setdefault(cid, set()).add(name)

    model = Model(
        window_ontology=window_ontology,
        schema_ontology=schema_ontology,
        instance_index={cid: tuple(sorted(v)) for cid, v in sorted(instance_index.items())},
        params=params,
        story_names=tuple(s.name for s in corpus.stories),
    )
    stats = BuildStats(
        stories=len(corpus.stories),
        sampled_windows=sampled,
        unique_window_bags=len(window_instances),
        skipped_windows=skipped,
        window_dl_raw=window_ontology.dl_trace[0] if window_ontology.dl_trace else 0,
        window_dl=window_ontology.description_length(),
        window_concepts=len(window_ontology.concepts),
        schema_dl_raw=schema_ontology.dl_trace[0] if schema_ontology.dl_trace else 0,
        schema_dl=schema_ontology.description_length(),
        schema_concepts=len(schema_ontology.concepts),
        window_parse_comparisons=window_parse_comparisons,
    )
    return BuildResult(model=model, story_bags=story_bags, stats=stats)


def probe_story_bag(story: Story, model: Model) -> tuple[Bag, int]:
    """The probe's story bag plus window-level parse comparisons."""
    params = model.params
    weighted, _, _ = _story_window_bags(story, params, "retrieve-window")
    tokens: set[str] = set()
    window_comparisons = 0
    for bag, _ in weighted:
        result = parse(bag, model.window_ontology, params.theta)
        window_comparisons += result.comparisons
        tokens |= model.window_ontology.inherited_concepts(result.concepts_used)
        tokens |= result.additions
    return frozenset(tokens), window_comparisons


def retrieve(story: Story, model: Model) -> Retrieval:
    """Schema concepts matched by a new story, with the schema-level scoring count."""
    story_bag, window_comparisons = probe_story_bag(story, model)
    result = parse(story_bag, model.schema_ontology, model.params.theta)
    schemas = model.schema_ontology.inherited_concepts(result.concepts_used)
    return Retrieval(
        schemas=schemas,
        comparisons=result.comparisons,
        window_comparisons=window_comparisons,
        story_bag=story_bag,
    )


def retrieve_instances(story: Story, model: Model) -> InstanceRetrieval:
    """Training stories inheriting from any schema matched by the probe."""
    r = retrieve(story, model)
    stories: set[str] = set()
    for cid in r.schemas:
        stories.update(model.instance_index.get(cid, ()))
    return InstanceRetrieval(
        stories=frozenset(stories),
        schemas=r.schemas,
        comparisons=r.comparisons,
        window_comparisons=r.window_comparisons,
        story_bag=r.story_bag,
    )


# ---------------------------------------------------------------------------
# Model persistence (directory of text artifacts; written atomically)


def save_model(model: Model, path: str | Path, overwrite: bool = False) -> Path:
    path = Path(path)
    if path.exists() and not overwrite:
        raise PipelineError(f"model path {path} already exists")
    tmp = path.with_name(path.name + ".tmp")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    meta = {
        "format": MODEL_FORMAT,
        "params": asdict(model.params),
        "stories": list(model.story_names),
    }
    (tmp / "model.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    (tmp / "window_ontology.txt").write_text(model.window_ontology.to_text())
    (tmp / "schema_ontology.txt").write_text(model.schema_ontology.to_text())
    index_lines = [
        " ".join([cid, *model.instance_index[cid]]) for cid in sorted(model.instance_index)
    ]
    (tmp / "instance_index.txt").write_text("\n".join(index_lines) + "\n")
    if path.exists():
        shutil.rmtree(path)
    os.replace(tmp, path)
    return path


def load_model(path: str | Path) -> Model:
    path = Path(path)
    meta_file = path / "model.json"
    if not meta_file.exists():
        raise PipelineError(f"{path} is not a model directory")
    meta = json.loads(meta_file.read_text())
    if meta.get("format") != MODEL_FORMAT:
        raise PipelineError(
            f"incompatible model version {meta.get('format')!r}, expected {MODEL_FORMAT!r}"
        )
    instance_index: dict[str, tuple[str, ...]] = {}
    index_text = (path / "instance_index.txt").read_text()
    for line in index_text.splitlines():
        if line.strip():
            cid, *names = line.split()
            instance_index[cid] = tuple(names)
    return Model(
        window_ontology=Ontology.from_text((path / "window_ontology.txt").read_text()),
        schema_ontology=Ontology.from_text((path / "schema_ontology.txt").read_text()),
        instance_index=instance_index,
        params=BuildParams(**meta["params"]),
        story_names=tuple(meta["stories"]),
    )
