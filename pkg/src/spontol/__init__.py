"""Spontol: analogical schema induction and sublinear analog retrieval.

Unsegmented relational structures (predicate-form stories) are sampled into
small connected windows, transformed into feature bags of role-path
equalities, and compressed twice by an MDL chunker: once over window bags,
once over story bags. The resulting schema ontology retrieves analogs for new
stories while scoring only the concepts that share tokens with the probe.
"""

from .baseline import BaselineStore, LinearRetrieval, build_store, linear_retrieve
from .corpus import (
    ArityConflict,
    Corpus,
    CorpusError,
    GenerationError,
    GeneratorParams,
    GroundTruth,
    PlantedSchema,
    Statement,
    Story,
    generate_synthetic,
    parse_corpus,
    parse_ground_truth,
    serialize_corpus,
    serialize_ground_truth,
)
from .evalharness import (
    EvalParams,
    EvalReport,
    OracleLimitError,
    oracle_common_substructure,
    oracle_optimal_chunk,
    oracle_optimal_parse,
    run_eval,
    template_embeds,
)
from .ontology import (
    ChunkConfig,
    Ontology,
    OntologyError,
    ParseResult,
    chunk,
    parse,
    predicted_tokens,
    reconstruct,
    unfold,
)
from .pipeline import (
    BuildParams,
    BuildResult,
    Model,
    PipelineError,
    build,
    load_model,
    retrieve,
    retrieve_instances,
    save_model,
)
from .transform import LabelCycleError, RolePath, canonical_compare, role_fillers, transform
from .windows import StoryGraph, WindowError, sample_window

__version__ = "0.1.0"

__all__ = [
    "ArityConflict",
    "BaselineStore",
    "BuildParams",
    "BuildResult",
    "ChunkConfig",
    "Corpus",
    "CorpusError",
    "EvalParams",
    "EvalReport",
    "GenerationError",
    "GeneratorParams",
    "GroundTruth",
    "LabelCycleError",
    "LinearRetrieval",
    "Model",
    "Ontology",
    "OntologyError",
    "OracleLimitError",
    "ParseResult",
    "PipelineError",
    "PlantedSchema",
    "RolePath",
    "Statement",
    "Story",
    "StoryGraph",
    "WindowError",
    "build",
    "build_store",
    "canonical_compare",
    "chunk",
    "generate_synthetic",
    "linear_retrieve",
    "load_model",
    "oracle_common_substructure",
    "oracle_optimal_chunk",
    "oracle_optimal_parse",
    "parse",
    "parse_corpus",
    "parse_ground_truth",
    "predicted_tokens",
    "reconstruct",
    "retrieve",
    "retrieve_instances",
    "role_fillers",
    "run_eval",
    "sample_window",
    "save_model",
    "serialize_corpus",
    "serialize_ground_truth",
    "template_embeds",
    "transform",
    "unfold",
]
