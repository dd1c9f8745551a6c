"""Modality-agnostic retrieval, the retrieval checker and prompt assembly.

Queries from any modality search the triplet index of the *same*
modality under L2, audio-visual queries search the joint index built
from concatenated normalized embeddings. The checker then re-embeds
each hit's triplet sentence with the text encoder of the query's
encoder family and discards hits whose cosine to the query falls below
a threshold, preserving retrieval order rather than re-ranking.

All operations are read-only over a frozen graph and indexes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .clients import ClientBundle, EncoderClient
from .errors import (
    MissingDescriptionError,
    UnknownModalityError,
    UnknownTripletError,
    VatkgError,
)
from .graph import KnowledgeGraph, MultimodalTriplet, triplet_to_sentence
from .index import FlatIndex, RetrievalHit, as_vector, cosine, joint_embedding
from .prompts import render_answer_prompt


class QueryModality(enum.Enum):
    AUDIO = "audio"
    VIDEO = "video"
    TEXT = "text"
    AUDIO_VIDEO = "audio_video"


_SINGLE_MODALITY_INDEX = {
    QueryModality.AUDIO: "audio",
    QueryModality.VIDEO: "video",
    QueryModality.TEXT: "text",
}


@dataclass
class RagConfig:
    top_k: int = 5
    l2_threshold: float | None = None
    checker_min_cos: float = 0.2
    checker_encoder: str = "video"  # which family checks audio-visual queries

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.checker_encoder not in ("audio", "video"):
            raise ValueError("checker_encoder must be 'audio' or 'video'")


@dataclass
class PromptBundle:
    """Assembled concept-description payload for the generation model."""

    question: str
    pairs: list[tuple[str, str, str, str]]
    rendered: str

    def to_json_doc(self) -> dict:
        return {
            "question": self.question,
            "pairs": [
                {
                    "head": h,
                    "head_description": hd,
                    "tail": t,
                    "tail_description": td,
                }
                for h, hd, t, td in self.pairs
            ],
            "rendered": self.rendered,
        }


def retrieve(
    indexes: Mapping[str, FlatIndex],
    query_emb: Sequence[float] | np.ndarray,
    modality: QueryModality,
    config: RagConfig,
) -> list[RetrievalHit]:
    """Search the same-modality triplet index under L2 semantics."""
    key = _SINGLE_MODALITY_INDEX.get(modality)
    if key is None or key not in indexes:
        raise UnknownModalityError(f"no index for modality {modality}")
    return indexes[key].search(query_emb, k=config.top_k, threshold=config.l2_threshold)


def retrieve_joint(
    indexes: Mapping[str, FlatIndex],
    audio_emb: Sequence[float] | np.ndarray,
    video_emb: Sequence[float] | np.ndarray,
    config: RagConfig,
) -> list[RetrievalHit]:
    """Concatenate normalized audio+video and search the joint index."""
    if "joint" not in indexes:
        raise UnknownModalityError("no joint index available")
    joint = joint_embedding(audio_emb, video_emb)
    return indexes["joint"].search(joint.values, k=config.top_k, threshold=config.l2_threshold)


def _triplet_for(graph: KnowledgeGraph, hit: RetrievalHit) -> MultimodalTriplet:
    triplet = graph.triplets_by_id.get(hit.entry_id)
    if triplet is None:
        raise UnknownTripletError(f"hit references unknown triplet {hit.entry_id!r}")
    return triplet


def check_retrieval(
    query_emb: Sequence[float] | np.ndarray,
    hits: Sequence[RetrievalHit],
    graph: KnowledgeGraph,
    encoder_client: EncoderClient,
    checker_min_cos: float,
) -> list[RetrievalHit]:
    """Drop hits whose sentence-vs-query cosine is below the threshold.

    Survivors keep their original relative order; the output is always a
    subsequence of the input.
    """
    query = as_vector(query_emb)
    survivors: list[RetrievalHit] = []
    for hit in hits:
        sentence = triplet_to_sentence(_triplet_for(graph, hit))
        sentence_emb = encoder_client.embed_text(sentence)
        if not cosine(query, sentence_emb) < checker_min_cos:
            survivors.append(hit)
    return survivors


def assemble_prompt(
    question: str,
    surviving_hits: Sequence[RetrievalHit],
    graph: KnowledgeGraph,
) -> PromptBundle:
    """Turn surviving hits into concept-description pairs plus rendered text."""
    pairs: list[tuple[str, str, str, str]] = []
    for hit in surviving_hits:
        triplet = _triplet_for(graph, hit)
        pair = []
        for surface, idx in (
            (triplet.head, triplet.head_desc_idx),
            (triplet.tail, triplet.tail_desc_idx),
        ):
            concept = graph.concepts.get(surface)
            if concept is None or not 0 <= idx < len(concept.candidates):
                raise MissingDescriptionError(
                    f"triplet {triplet.triplet_id} lacks a description for {surface!r}"
                )
            pair.extend((surface, concept.candidates[idx].text))
        pairs.append(tuple(pair))
    rendered = render_answer_prompt(question, pairs)
    return PromptBundle(question=question, pairs=pairs, rendered=rendered)


@dataclass
class QueryRequest:
    """Parsed wire-format query (see External Interfaces in the README)."""

    question: str
    modality: QueryModality
    audio_emb: np.ndarray | None = None
    video_emb: np.ndarray | None = None
    text: str | None = None

    @classmethod
    def from_json_doc(cls, doc: Mapping) -> "QueryRequest":
        try:
            modality = QueryModality(doc["modality"])
            question = doc["question"]
        except (KeyError, ValueError) as exc:
            raise UnknownModalityError(f"malformed query request: {exc}") from exc
        if not isinstance(question, str) or not question:
            raise UnknownModalityError("query request must carry a non-empty question")
        audio = doc.get("audio_emb")
        video = doc.get("video_emb")
        text = doc.get("text")
        request = cls(
            question=question,
            modality=modality,
            audio_emb=as_vector(audio) if audio is not None else None,
            video_emb=as_vector(video) if video is not None else None,
            text=text,
        )
        request.validate()
        return request

    def validate(self) -> None:
        needs = {
            QueryModality.AUDIO: self.audio_emb is not None,
            QueryModality.VIDEO: self.video_emb is not None,
            QueryModality.TEXT: bool(self.text),
            QueryModality.AUDIO_VIDEO: self.audio_emb is not None
            and self.video_emb is not None,
        }
        if not needs[self.modality]:
            raise UnknownModalityError(
                f"modality {self.modality.value} is missing its query payload"
            )


@dataclass
class AnswerResult:
    """Final completion plus the intermediate artifacts for inspection."""

    answer: str
    bundle: PromptBundle
    hits: list[RetrievalHit]
    surviving_hits: list[RetrievalHit] = field(default_factory=list)

    def to_json_doc(self) -> dict:
        return {
            "answer": self.answer,
            "pairs": self.bundle.to_json_doc()["pairs"],
            "hits": [
                {"triplet_id": h.entry_id, "score": h.score} for h in self.hits
            ],
        }


def _stage(name: str, exc: VatkgError) -> VatkgError:
    exc.stage = name  # type: ignore[attr-defined]
    exc.args = (f"[{name}] {exc}",)
    return exc


def answer(
    request: QueryRequest,
    indexes: Mapping[str, FlatIndex],
    graph: KnowledgeGraph,
    clients: ClientBundle,
    config: RagConfig,
    dry_run: bool = False,
) -> AnswerResult:
    """encode -> retrieve -> check -> assemble -> generate.

    Errors from each phase propagate annotated with the phase name via
    their `stage` attribute. With `dry_run` the generation call is
    skipped and the answer string is empty.
    """
    assert clients.text_encoder is not None and clients.generator is not None

    # encode: produce the query embedding and pick the checker's encoder
    try:
        if request.modality is QueryModality.TEXT:
            query_emb = clients.text_encoder.embed_text(request.text or "")
            checker_query, checker_encoder = query_emb, clients.text_encoder
        elif request.modality is QueryModality.AUDIO:
            query_emb = request.audio_emb
            checker_query, checker_encoder = query_emb, clients.audio_encoder
        elif request.modality is QueryModality.VIDEO:
            query_emb = request.video_emb
            checker_query, checker_encoder = query_emb, clients.video_encoder
        else:
            query_emb = None  # joint is built inside retrieve_joint
            if config.checker_encoder == "audio":
                checker_query, checker_encoder = request.audio_emb, clients.audio_encoder
            else:
                checker_query, checker_encoder = request.video_emb, clients.video_encoder
    except VatkgError as exc:
        raise _stage("encode", exc)

    # retrieve
    try:
        if request.modality is QueryModality.AUDIO_VIDEO:
            hits = retrieve_joint(indexes, request.audio_emb, request.video_emb, config)
        else:
            hits = retrieve(indexes, query_emb, request.modality, config)
    except VatkgError as exc:
        raise _stage("retrieve", exc)

    # check
    try:
        surviving = check_retrieval(
            checker_query, hits, graph, checker_encoder, config.checker_min_cos
        )
    except VatkgError as exc:
        raise _stage("check", exc)

    # assemble
    try:
        bundle = assemble_prompt(request.question, surviving, graph)
    except VatkgError as exc:
        raise _stage("assemble", exc)

    if dry_run:
        return AnswerResult(answer="", bundle=bundle, hits=hits, surviving_hits=surviving)

    # generate
    try:
        completion = clients.generator.complete(bundle.rendered)
    except VatkgError as exc:
        raise _stage("generate", exc)
    return AnswerResult(
        answer=completion, bundle=bundle, hits=hits, surviving_hits=surviving
    )
