"""Concept-centric multimodal knowledge graphs with modality-agnostic retrieval."""

from .graph import (
    Concept,
    ConceptDescription,
    KnowledgeGraph,
    MultimodalSample,
    MultimodalTriplet,
    Source,
    StatsReport,
    graph_stats,
    load_graph,
    save_graph,
    triplet_to_sentence,
)
from .index import (
    FlatIndex,
    JointEmbedding,
    Metric,
    RetrievalHit,
    build_index,
    cosine,
    joint_embedding,
    l2_distance,
    load_index,
    normalize,
    save_index,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    Stage,
    StageReport,
    run_pipeline,
)
from .rag import AnswerResult, PromptBundle, QueryModality, QueryRequest, RagConfig, answer

__version__ = "0.1.0"

__all__ = [
    "AnswerResult",
    "Concept",
    "ConceptDescription",
    "FlatIndex",
    "JointEmbedding",
    "KnowledgeGraph",
    "Metric",
    "MultimodalSample",
    "MultimodalTriplet",
    "PipelineConfig",
    "PipelineResult",
    "PromptBundle",
    "QueryModality",
    "QueryRequest",
    "RagConfig",
    "RetrievalHit",
    "Source",
    "Stage",
    "StageReport",
    "StatsReport",
    "answer",
    "build_index",
    "cosine",
    "graph_stats",
    "joint_embedding",
    "l2_distance",
    "load_graph",
    "load_index",
    "normalize",
    "run_pipeline",
    "save_graph",
    "save_index",
    "triplet_to_sentence",
]
