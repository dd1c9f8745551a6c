"""Concept-centric knowledge-graph data model, persistence and statistics.

Concepts carry 1..5 candidate descriptions with source provenance;
triplets ground a (head, relation, tail) in exactly one multimodal
sample and pin the chosen description sense per endpoint. Embeddings
live in separate index files so the graph JSON stays human-inspectable.

Surfaces are normalized by trimming and collapsing internal whitespace,
case-preserving: "Apple" and "apple" stay distinct senses.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import (
    DescriptionIndexOutOfRangeError,
    EmptyCandidateListError,
    InvariantViolationOnLoadError,
    SchemaVersionMismatchError,
    StorageError,
    TooManyCandidatesError,
    UnknownConceptError,
    UnknownSampleError,
)
from .hashing import fnv1a64_hex

GRAPH_SCHEMA = "vatkg-graph/1"
MAX_CANDIDATES = 5

_WHITESPACE_RUN = re.compile(r"\s+")


def normalize_surface(surface: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WHITESPACE_RUN.sub(" ", surface.strip())


def triplet_id_for(sample_id: str, head: str, relation: str, tail: str) -> str:
    """Deterministic triplet id: FNV-1a over the US-separated key fields."""
    key = "\x1f".join((sample_id, head, relation, tail))
    return fnv1a64_hex(key.encode("utf-8"))


class Source(enum.Enum):
    """Provenance of a candidate description."""

    WIKIPEDIA = "wikipedia"
    WIKTIONARY = "wiktionary"
    LLM = "llm"


@dataclass(frozen=True)
class ConceptDescription:
    text: str
    source: Source

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("description text must be non-empty")


@dataclass
class Concept:
    """A unique surface form plus its 1..5 candidate descriptions."""

    surface: str
    candidates: list[ConceptDescription]


@dataclass
class MultimodalSample:
    """One corpus row: media URIs, working caption, optional metadata.

    `title` and `description_meta` must both be present for the sample to
    be eligible for recaptioning; `category` is an optional ingested label
    used only by statistics.
    """

    id: str
    video_uri: str
    audio_uri: str
    caption: str
    title: str | None = None
    description_meta: str | None = None
    frame_count: int | None = None
    category: str | None = None

    @property
    def has_metadata(self) -> bool:
        return self.title is not None and self.description_meta is not None


@dataclass(frozen=True)
class MultimodalTriplet:
    triplet_id: str
    head: str
    relation: str
    tail: str
    sample_id: str
    head_desc_idx: int
    tail_desc_idx: int


def triplet_to_sentence(triplet: MultimodalTriplet) -> str:
    """Serialize to "{head} {relation} {tail}" with single-space joins."""
    return f"{triplet.head} {triplet.relation} {triplet.tail}"


@dataclass
class KnowledgeGraph:
    """Mutable container during construction, frozen by convention after.

    Mutation is single-writer; a built graph is safe for any number of
    concurrent readers.
    """

    concepts: dict[str, Concept] = field(default_factory=dict)
    triplets: list[MultimodalTriplet] = field(default_factory=list)
    samples: dict[str, MultimodalSample] = field(default_factory=dict)
    triplets_by_id: dict[str, MultimodalTriplet] = field(default_factory=dict, compare=False)

    def add_sample(self, sample: MultimodalSample) -> None:
        self.samples[sample.id] = sample

    def upsert_concept(
        self, surface: str, candidates: Iterable[ConceptDescription]
    ) -> Concept:
        """Insert a concept, or refresh its candidates on re-upsert.

        A re-upsert replaces the stored candidate list only when the new
        list is a superset-by-text of the old one; otherwise the existing
        list is kept, so concurrent pipeline shards can never silently
        drop descriptions.
        """
        surface = normalize_surface(surface)
        new = list(candidates)
        if not new:
            raise EmptyCandidateListError(f"concept {surface!r} upserted with no candidates")
        if len(new) > MAX_CANDIDATES:
            raise TooManyCandidatesError(
                f"concept {surface!r} upserted with {len(new)} candidates (max {MAX_CANDIDATES})"
            )
        existing = self.concepts.get(surface)
        if existing is not None:
            old_texts = {c.text for c in existing.candidates}
            new_texts = {c.text for c in new}
            if not new_texts.issuperset(old_texts):
                return existing
        concept = Concept(surface=surface, candidates=new)
        self.concepts[surface] = concept
        return concept

    def add_triplet(
        self,
        head: str,
        relation: str,
        tail: str,
        sample_id: str,
        head_desc_idx: int,
        tail_desc_idx: int,
    ) -> str:
        head = normalize_surface(head)
        tail = normalize_surface(tail)
        for surface in (head, tail):
            if surface not in self.concepts:
                raise UnknownConceptError(f"triplet references unknown concept {surface!r}")
        if sample_id not in self.samples:
            raise UnknownSampleError(f"triplet references unknown sample {sample_id!r}")
        for surface, idx in ((head, head_desc_idx), (tail, tail_desc_idx)):
            n = len(self.concepts[surface].candidates)
            if not 0 <= idx < n:
                raise DescriptionIndexOutOfRangeError(
                    f"description index {idx} out of range for {surface!r} ({n} candidates)"
                )
        tid = triplet_id_for(sample_id, head, relation, tail)
        triplet = MultimodalTriplet(
            triplet_id=tid,
            head=head,
            relation=relation,
            tail=tail,
            sample_id=sample_id,
            head_desc_idx=head_desc_idx,
            tail_desc_idx=tail_desc_idx,
        )
        self.triplets.append(triplet)
        self.triplets_by_id[tid] = triplet
        return tid

    def validate(self) -> None:
        """Check referential integrity and cardinality; raise on violation."""
        for surface, concept in self.concepts.items():
            n = len(concept.candidates)
            if not 1 <= n <= MAX_CANDIDATES:
                raise InvariantViolationOnLoadError(
                    f"concept {surface!r} has {n} candidates"
                )
        for t in self.triplets:
            for surface, idx in ((t.head, t.head_desc_idx), (t.tail, t.tail_desc_idx)):
                concept = self.concepts.get(surface)
                if concept is None:
                    raise InvariantViolationOnLoadError(
                        f"triplet {t.triplet_id} references unknown concept {surface!r}"
                    )
                if not 0 <= idx < len(concept.candidates):
                    raise InvariantViolationOnLoadError(
                        f"triplet {t.triplet_id} has out-of-range description index"
                    )
            if t.sample_id not in self.samples:
                raise InvariantViolationOnLoadError(
                    f"triplet {t.triplet_id} references unknown sample {t.sample_id!r}"
                )
        if self.triplets and len(self.concepts) > 2 * len(self.triplets):
            raise InvariantViolationOnLoadError(
                "more unique concepts than two per triplet"
            )


# --- persistence --------------------------------------------------------------

_SAMPLE_KEYS = {
    "id",
    "video_uri",
    "audio_uri",
    "caption",
    "title",
    "description_meta",
    "frame_count",
    "category",
}
_TRIPLET_KEYS = {
    "triplet_id",
    "head",
    "relation",
    "tail",
    "sample",
    "head_desc_idx",
    "tail_desc_idx",
}


def graph_to_json_doc(graph: KnowledgeGraph) -> dict:
    """Canonical JSON document: sorted concepts/samples, triplets in order."""
    concepts = []
    for surface in sorted(graph.concepts):
        concept = graph.concepts[surface]
        concepts.append(
            {
                "surface": concept.surface,
                "candidates": [
                    {"text": c.text, "source": c.source.value} for c in concept.candidates
                ],
            }
        )
    samples = []
    for sample_id in sorted(graph.samples):
        s = graph.samples[sample_id]
        doc: dict = {
            "id": s.id,
            "video_uri": s.video_uri,
            "audio_uri": s.audio_uri,
            "caption": s.caption,
        }
        if s.title is not None:
            doc["title"] = s.title
        if s.description_meta is not None:
            doc["description_meta"] = s.description_meta
        if s.frame_count is not None:
            doc["frame_count"] = s.frame_count
        if s.category is not None:
            doc["category"] = s.category
        samples.append(doc)
    triplets = [
        {
            "triplet_id": t.triplet_id,
            "head": t.head,
            "relation": t.relation,
            "tail": t.tail,
            "sample": t.sample_id,
            "head_desc_idx": t.head_desc_idx,
            "tail_desc_idx": t.tail_desc_idx,
        }
        for t in graph.triplets
    ]
    return {
        "schema": GRAPH_SCHEMA,
        "concepts": concepts,
        "triplets": triplets,
        "samples": samples,
    }


def graph_to_bytes(graph: KnowledgeGraph) -> bytes:
    """Byte-stable serialization; identical graphs give identical bytes."""
    doc = graph_to_json_doc(graph)
    return (json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n").encode(
        "utf-8"
    )


def save_graph(graph: KnowledgeGraph, path: str | Path) -> None:
    try:
        Path(path).write_bytes(graph_to_bytes(graph))
    except OSError as exc:
        raise StorageError(f"cannot write graph to {path}: {exc}") from exc


def _reject_unknown_keys(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise InvariantViolationOnLoadError(
            f"unknown keys {sorted(unknown)} in {where}"
        )


def load_graph(path: str | Path) -> KnowledgeGraph:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read graph from {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvariantViolationOnLoadError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvariantViolationOnLoadError(f"{path} top level must be an object")
    schema = doc.get("schema")
    if schema != GRAPH_SCHEMA:
        raise SchemaVersionMismatchError(f"{path} declares schema {schema!r}")
    _reject_unknown_keys(doc, {"schema", "concepts", "triplets", "samples"}, "graph document")

    graph = KnowledgeGraph()
    try:
        for sdoc in doc.get("samples", []):
            _reject_unknown_keys(sdoc, _SAMPLE_KEYS, "sample record")
            graph.add_sample(
                MultimodalSample(
                    id=sdoc["id"],
                    video_uri=sdoc["video_uri"],
                    audio_uri=sdoc["audio_uri"],
                    caption=sdoc["caption"],
                    title=sdoc.get("title"),
                    description_meta=sdoc.get("description_meta"),
                    frame_count=sdoc.get("frame_count"),
                    category=sdoc.get("category"),
                )
            )
        for cdoc in doc.get("concepts", []):
            _reject_unknown_keys(cdoc, {"surface", "candidates"}, "concept record")
            candidates = []
            for cand in cdoc["candidates"]:
                _reject_unknown_keys(cand, {"text", "source"}, "candidate record")
                try:
                    source = Source(cand["source"])
                except ValueError:
                    raise InvariantViolationOnLoadError(
                        f"unknown description source {cand['source']!r}"
                    ) from None
                candidates.append(ConceptDescription(text=cand["text"], source=source))
            if not candidates:
                raise InvariantViolationOnLoadError(
                    f"concept {cdoc['surface']!r} loaded with no candidates"
                )
            if len(candidates) > MAX_CANDIDATES:
                raise InvariantViolationOnLoadError(
                    f"concept {cdoc['surface']!r} loaded with {len(candidates)} candidates"
                )
            graph.concepts[cdoc["surface"]] = Concept(
                surface=cdoc["surface"], candidates=candidates
            )
        for tdoc in doc.get("triplets", []):
            _reject_unknown_keys(tdoc, _TRIPLET_KEYS, "triplet record")
            triplet = MultimodalTriplet(
                triplet_id=tdoc["triplet_id"],
                head=tdoc["head"],
                relation=tdoc["relation"],
                tail=tdoc["tail"],
                sample_id=tdoc["sample"],
                head_desc_idx=tdoc["head_desc_idx"],
                tail_desc_idx=tdoc["tail_desc_idx"],
            )
            graph.triplets.append(triplet)
            graph.triplets_by_id[triplet.triplet_id] = triplet
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolationOnLoadError(f"{path} has a malformed record: {exc}") from exc
    graph.validate()
    return graph


# --- statistics ---------------------------------------------------------------


@dataclass
class StatsReport:
    """Counts and distributions over a built graph.

    `grounding_per_concept` maps (number of triplets touching a concept)
    to how many concepts have that count; a triplet with head == tail
    contributes one touch, so the reference total is 2*|triplets| minus
    the self-loop count.
    """

    concept_count: int
    triplet_count: int
    sample_count: int
    grounding_per_concept: dict[int, int]
    description_word_lengths: dict[int, int]
    category_counts: dict[str, int]

    def to_json_doc(self) -> dict:
        return {
            "concepts": self.concept_count,
            "triplets": self.triplet_count,
            "samples": self.sample_count,
            "grounding_per_concept": [
                [k, v] for k, v in sorted(self.grounding_per_concept.items())
            ],
            "description_word_lengths": [
                [k, v] for k, v in sorted(self.description_word_lengths.items())
            ],
            "categories": dict(sorted(self.category_counts.items())),
        }


def graph_stats(graph: KnowledgeGraph) -> StatsReport:
    """Aggregate the per-concept grounding, description-length and category counts."""
    touches: dict[str, int] = {surface: 0 for surface in graph.concepts}
    for t in graph.triplets:
        endpoints = {t.head, t.tail}
        for surface in endpoints:
            if surface in touches:
                touches[surface] += 1
    grounding_hist: dict[int, int] = {}
    for count in touches.values():
        grounding_hist[count] = grounding_hist.get(count, 0) + 1

    word_lengths: dict[int, int] = {}
    for concept in graph.concepts.values():
        for cand in concept.candidates:
            n = len(cand.text.split())
            word_lengths[n] = word_lengths.get(n, 0) + 1

    categories: dict[str, int] = {}
    for t in graph.triplets:
        sample = graph.samples.get(t.sample_id)
        if sample is not None and sample.category is not None:
            categories[sample.category] = categories.get(sample.category, 0) + 1

    return StatsReport(
        concept_count=len(graph.concepts),
        triplet_count=len(graph.triplets),
        sample_count=len(graph.samples),
        grounding_per_concept=grounding_hist,
        description_word_lengths=word_lengths,
        category_counts=categories,
    )
