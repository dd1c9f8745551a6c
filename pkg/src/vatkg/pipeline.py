"""Four-stage construction pipeline over a corpus manifest.

Stage order is fixed: voice-over veto, audio-text cosine filter,
video-text percentile filter (together the alignment filtering), then
recaptioning, triplet grounding and description alignment. Each stage
emits a report whose kept + dropped counts conserve its input.

Per-sample work is independent and could run concurrently; this
implementation commits results in ascending sample-id order, which is
also what a concurrent scheduler would have to do to stay
deterministic.
"""

from __future__ import annotations

import enum
import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .clients import ClientBundle, EncoderClient, KbClient, LlmClient
from .errors import (
    AllSourcesFailedError,
    BadStatusError,
    DimMismatchError,
    EmptyCompletionError,
    EncoderUnavailableError,
    LlmUnavailableError,
    ManifestParseError,
    NoCandidatesParsedError,
    SchemaError,
    StorageError,
    UnreachableError,
    UnscriptedPromptError,
    WrongTagCountError,
    ZeroFramesError,
    ZeroVectorError,
)
from .graph import (
    ConceptDescription,
    KnowledgeGraph,
    MultimodalSample,
    Source,
    normalize_surface,
)
from .index import FlatIndex, Metric, as_vector, build_index, cosine, joint_embedding
from .prompts import (
    render_description_prompt,
    render_recaption_prompt,
    render_triplet_prompt,
)


class Stage(enum.Enum):
    VOICE_OVER = "voice_over"
    AUDIO_TEXT = "audio_text"
    VIDEO_TEXT = "video_text"
    RECAPTION = "recaption"
    GROUNDING = "grounding"
    ALIGNMENT = "alignment"


@dataclass
class StageReport:
    """Accounting for one stage: kept + dropped must equal the input."""

    stage: Stage
    input_count: int
    kept_count: int
    dropped_ids: list[str]

    def __post_init__(self) -> None:
        if self.kept_count + len(self.dropped_ids) != self.input_count:
            raise ValueError(
                f"{self.stage.value}: kept {self.kept_count} + dropped "
                f"{len(self.dropped_ids)} != input {self.input_count}"
            )


@dataclass(frozen=True)
class CandidateTriplet:
    """One parsed LLM candidate; ordinal is its position in output order."""

    head: str
    relation: str
    tail: str
    ordinal: int


@dataclass
class PipelineConfig:
    audio_text_min_cos: float = 0.2
    video_text_drop_fraction: float = 0.10
    voice_over_labels: frozenset[str] = frozenset({"speech", "audio"})
    max_descriptions: int = 5
    candidate_count_hint: int = 5
    retry_attempts: int = 3
    retry_base_delay: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 < self.audio_text_min_cos < 1.0:
            raise ValueError("audio_text_min_cos must be in (0, 1)")
        if not 0.0 <= self.video_text_drop_fraction < 1.0:
            raise ValueError("video_text_drop_fraction must be in [0, 1)")
        if self.max_descriptions < 1 or self.candidate_count_hint < 1:
            raise ValueError("max_descriptions and candidate_count_hint must be >= 1")
        self.voice_over_labels = frozenset(self.voice_over_labels)


# --- stage 1 filters ------------------------------------------------------------


def voice_over_filter(top5_tags: Sequence[str], labels: frozenset[str] | set[str]) -> bool:
    """True to keep. Drops when *every* veto label appears among the tags.

    Matching is case-insensitive. An empty label set is a vacuous
    conjunction and therefore always drops.
    """
    if len(top5_tags) != 5:
        raise WrongTagCountError(f"expected exactly 5 tags, got {len(top5_tags)}")
    tags = {t.casefold() for t in top5_tags}
    return not all(label.casefold() in tags for label in labels)


def audio_text_filter(
    audio_emb: np.ndarray, text_emb: np.ndarray, min_cos: float
) -> bool:
    """True to keep: drops only when cosine is strictly below `min_cos`."""
    return not cosine(audio_emb, text_emb) < min_cos


def video_text_percentile_filter(
    scores: Sequence[tuple[str, float]], drop_fraction: float
) -> tuple[list[str], StageReport]:
    """Drop the floor(drop_fraction * n) lowest-scored sample ids.

    Ties on score break by ascending sample id, lower id dropped first.
    Kept ids come back in their input order.
    """
    if not 0.0 <= drop_fraction < 1.0:
        raise ValueError("drop_fraction must be in [0, 1)")
    n = len(scores)
    drop_count = math.floor(drop_fraction * n)
    by_badness = sorted(scores, key=lambda pair: (pair[1], pair[0]))
    dropped = {sid for sid, _ in by_badness[:drop_count]}
    kept = [sid for sid, _ in scores if sid not in dropped]
    report = StageReport(
        stage=Stage.VIDEO_TEXT,
        input_count=n,
        kept_count=len(kept),
        dropped_ids=sorted(dropped),
    )
    return kept, report


def center_frame_index(frame_count: int) -> int:
    """0-based index of the center frame: floor(frame_count / 2)."""
    if frame_count < 1:
        raise ZeroFramesError(f"frame_count must be >= 1, got {frame_count}")
    return frame_count // 2


# --- stages 2-4 ------------------------------------------------------------------

_PAREN_FORM = re.compile(r"^\((.+?);(.+?);(.+?)\)$")
_PIPE_FORM = re.compile(r"^([^|]+)\|([^|]+)\|([^|]+)$")


def parse_candidate_triplets(text: str) -> tuple[list[CandidateTriplet], int]:
    """Parse "(head; relation; tail)" lines, tolerating "head | relation | tail".

    Lines matching neither form are skipped; the skip count is returned
    alongside the parsed candidates, whose ordinals follow output order.
    """
    candidates: list[CandidateTriplet] = []
    skipped = 0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        match = _PAREN_FORM.match(line) or _PIPE_FORM.match(line)
        if match is None:
            skipped += 1
            continue
        head, relation, tail = (part.strip() for part in match.groups())
        if not head or not relation or not tail:
            skipped += 1
            continue
        candidates.append(
            CandidateTriplet(head=head, relation=relation, tail=tail, ordinal=len(candidates))
        )
    return candidates, skipped


def recaption(sample: MultimodalSample, llm_client: LlmClient) -> str | None:
    """Refine the working caption via the LLM, or None when metadata is missing.

    A missing title or description excludes the sample (reported, not
    errored); an empty LLM completion is an error.
    """
    if not sample.has_metadata:
        return None
    prompt = render_recaption_prompt(
        caption=sample.caption,
        title=sample.title or "",
        description=sample.description_meta or "",
    )
    text = llm_client.complete(prompt).strip()
    if not text:
        raise EmptyCompletionError(f"empty recaption for sample {sample.id!r}")
    return text


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    va = as_vector(a).astype(np.float64)
    vb = as_vector(b).astype(np.float64)
    if va.shape[0] != vb.shape[0]:
        raise DimMismatchError(f"dims differ: {va.shape[0]} vs {vb.shape[0]}")
    return float(np.dot(va, vb))


def candidate_sentence(candidate: CandidateTriplet) -> str:
    return f"{candidate.head} {candidate.relation} {candidate.tail}"


@dataclass
class GroundingResult:
    candidates: list[CandidateTriplet]
    scores: list[float]
    selected: CandidateTriplet
    skipped_lines: int


def ground_triplets(
    caption: str,
    video_emb: np.ndarray,
    llm_client: LlmClient,
    encoder_client: EncoderClient,
    candidate_count_hint: int = 5,
) -> GroundingResult:
    """Extract candidate triplets and keep the one closest to the video.

    Each candidate is serialized to a sentence, embedded with the
    encoder's text endpoint, and scored by inner product against the
    video embedding; ties go to the lowest ordinal.
    """
    if not caption:
        raise NoCandidatesParsedError("cannot ground an empty caption")
    completion = llm_client.complete(render_triplet_prompt(caption, candidate_count_hint))
    candidates, skipped = parse_candidate_triplets(completion)
    if not candidates:
        raise NoCandidatesParsedError(
            f"no candidate triplets parsed ({skipped} lines skipped)"
        )
    scores = [
        _inner(encoder_client.embed_text(candidate_sentence(c)), video_emb)
        for c in candidates
    ]
    best = max(range(len(candidates)), key=lambda i: (scores[i], -i))
    return GroundingResult(
        candidates=candidates,
        scores=scores,
        selected=candidates[best],
        skipped_lines=skipped,
    )


@dataclass
class AlignmentResult:
    candidates: list[ConceptDescription]
    scores: list[float]
    selected_index: int


def align_descriptions(
    concept_surface: str,
    grounding_sample: MultimodalSample,
    kb_client: KbClient,
    encoder_client: EncoderClient,
    llm_client: LlmClient,
    max_candidates: int = 5,
) -> AlignmentResult:
    """Collect up to `max_candidates` descriptions and pick the best sense.

    Sources are drained in priority order Wikipedia, Wiktionary, then the
    LLM; duplicates-by-text keep their first (highest-priority) source.
    The winner maximizes the inner product between the concept-conditioned
    video embedding and each description's text embedding, ties to the
    lowest candidate index.
    """
    candidates: list[ConceptDescription] = []
    seen_texts: set[str] = set()

    def _extend(texts: Sequence[str], source: Source) -> None:
        for text in texts:
            text = text.strip()
            if not text or text in seen_texts or len(candidates) >= max_candidates:
                continue
            seen_texts.add(text)
            candidates.append(ConceptDescription(text=text, source=source))

    _extend(kb_client.fetch(concept_surface, Source.WIKIPEDIA), Source.WIKIPEDIA)
    if len(candidates) < max_candidates:
        _extend(kb_client.fetch(concept_surface, Source.WIKTIONARY), Source.WIKTIONARY)
    if len(candidates) < max_candidates:
        remaining = max_candidates - len(candidates)
        completion = llm_client.complete(
            render_description_prompt(concept_surface, remaining)
        )
        texts = [line.strip() for line in completion.splitlines() if line.strip()]
        _extend(texts[:remaining], Source.LLM)
    if not candidates:
        raise AllSourcesFailedError(
            f"no source produced a description for {concept_surface!r}"
        )

    conditioned = encoder_client.embed_video_conditioned(
        grounding_sample.video_uri, concept_surface
    )
    scores = [
        _inner(conditioned, encoder_client.embed_text(c.text)) for c in candidates
    ]
    best = max(range(len(candidates)), key=lambda i: (scores[i], -i))
    return AlignmentResult(candidates=candidates, scores=scores, selected_index=best)


# --- manifest -------------------------------------------------------------------

_MANIFEST_REQUIRED = ("id", "video_uri", "audio_uri", "caption")


def load_manifest(path: str | Path) -> list[MultimodalSample]:
    """Parse the JSON-Lines corpus manifest; reject duplicates and bad rows."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestParseError(f"cannot read manifest {path}: {exc}") from exc
    samples: list[MultimodalSample] = []
    seen: set[str] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestParseError(f"manifest line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(row, dict):
            raise ManifestParseError(f"manifest line {lineno}: expected an object")
        for key in _MANIFEST_REQUIRED:
            if not isinstance(row.get(key), str) or not row[key]:
                raise ManifestParseError(
                    f"manifest line {lineno}: missing or empty field {key!r}"
                )
        if row["id"] in seen:
            raise ManifestParseError(f"manifest line {lineno}: duplicate id {row['id']!r}")
        seen.add(row["id"])
        frame_count = row.get("frame_count")
        if frame_count is not None and (not isinstance(frame_count, int) or frame_count < 1):
            raise ManifestParseError(
                f"manifest line {lineno}: frame_count must be a positive integer"
            )
        samples.append(
            MultimodalSample(
                id=row["id"],
                video_uri=row["video_uri"],
                audio_uri=row["audio_uri"],
                caption=row["caption"],
                title=row.get("title"),
                description_meta=row.get("description"),
                frame_count=frame_count,
                category=row.get("category"),
            )
        )
    return samples


# --- orchestration ----------------------------------------------------------------

_TRANSIENT_ERRORS = (
    LlmUnavailableError,
    EncoderUnavailableError,
    UnreachableError,
    BadStatusError,
)

# Content and client failures that drop the offending sample instead of
# aborting the whole batch.
_DROPPABLE_ERRORS = _TRANSIENT_ERRORS + (
    SchemaError,
    UnscriptedPromptError,
    EmptyCompletionError,
    NoCandidatesParsedError,
    AllSourcesFailedError,
    WrongTagCountError,
    ZeroVectorError,
    DimMismatchError,
)


def call_with_retries(
    fn: Callable[[], object],
    attempts: int = 3,
    base_delay: float = 0.25,
    sleep: Callable[[float], None] = time.sleep,
):
    """Retry transient client failures with exponential backoff."""
    last: Exception | None = None
    for attempt in range(attempts):
        try:
            return fn()
        except _TRANSIENT_ERRORS as exc:
            last = exc
            if attempt + 1 < attempts:
                sleep(base_delay * (2**attempt))
    assert last is not None
    raise last


@dataclass
class PipelineResult:
    graph: KnowledgeGraph
    indexes: dict[str, FlatIndex]
    reports: list[StageReport]
    center_frames: dict[str, int] = field(default_factory=dict)
    drop_reasons: dict[str, str] = field(default_factory=dict)


def run_pipeline(
    manifest_path: str | Path,
    config: PipelineConfig,
    clients: ClientBundle,
    sleep: Callable[[float], None] = time.sleep,
) -> PipelineResult:
    """Run all stages over the manifest and build the per-modality indexes.

    Deterministic given fixed inputs, config and clients: samples are
    processed in ascending id order, so outputs and serialized artifacts
    are byte-stable across reruns.
    """
    samples = sorted(load_manifest(manifest_path), key=lambda s: s.id)
    reports: list[StageReport] = []
    drop_reasons: dict[str, str] = {}
    audio_cache: dict[str, np.ndarray] = {}
    video_cache: dict[str, np.ndarray] = {}

    def _retry(fn: Callable[[], object]):
        return call_with_retries(
            fn, attempts=config.retry_attempts, base_delay=config.retry_base_delay, sleep=sleep
        )

    def _drop(stage: Stage, sample_id: str, exc: Exception, dropped: list[str]) -> None:
        drop_reasons[sample_id] = f"{stage.value}: {exc}"
        dropped.append(sample_id)

    def _audio_emb(sample: MultimodalSample) -> np.ndarray:
        if sample.audio_uri not in audio_cache:
            audio_cache[sample.audio_uri] = _retry(
                lambda: clients.audio_encoder.embed_audio(sample.audio_uri)
            )
        return audio_cache[sample.audio_uri]

    def _video_emb(sample: MultimodalSample) -> np.ndarray:
        if sample.video_uri not in video_cache:
            video_cache[sample.video_uri] = _retry(
                lambda: clients.video_encoder.embed_video(sample.video_uri)
            )
        return video_cache[sample.video_uri]

    # stage 1a: voice-over veto
    kept: list[MultimodalSample] = []
    dropped_ids: list[str] = []
    for sample in samples:
        try:
            tags = _retry(lambda: clients.audio_encoder.tag_audio(sample.audio_uri))
            keep = voice_over_filter(tags, config.voice_over_labels)
        except _DROPPABLE_ERRORS as exc:
            _drop(Stage.VOICE_OVER, sample.id, exc, dropped_ids)
            continue
        if keep:
            kept.append(sample)
        else:
            dropped_ids.append(sample.id)
    reports.append(
        StageReport(Stage.VOICE_OVER, len(samples), len(kept), sorted(dropped_ids))
    )

    # stage 1b: audio-text relevance
    current, kept, dropped_ids = kept, [], []
    for sample in current:
        try:
            audio_emb = _audio_emb(sample)
            text_emb = _retry(lambda: clients.audio_encoder.embed_text(sample.caption))
            keep = audio_text_filter(audio_emb, text_emb, config.audio_text_min_cos)
        except _DROPPABLE_ERRORS as exc:
            _drop(Stage.AUDIO_TEXT, sample.id, exc, dropped_ids)
            continue
        if keep:
            kept.append(sample)
        else:
            dropped_ids.append(sample.id)
    reports.append(
        StageReport(Stage.AUDIO_TEXT, len(current), len(kept), sorted(dropped_ids))
    )

    # stage 1c: video-text relevance (percentile)
    current, scored, dropped_ids = kept, [], []
    for sample in current:
        try:
            video_emb = _video_emb(sample)
            text_emb = _retry(lambda: clients.video_encoder.embed_text(sample.caption))
            scored.append((sample, cosine(video_emb, text_emb)))
        except _DROPPABLE_ERRORS as exc:
            _drop(Stage.VIDEO_TEXT, sample.id, exc, dropped_ids)
    kept_ids, percentile_report = video_text_percentile_filter(
        [(s.id, score) for s, score in scored], config.video_text_drop_fraction
    )
    kept_id_set = set(kept_ids)
    kept = [s for s, _ in scored if s.id in kept_id_set]
    for sid in percentile_report.dropped_ids:
        drop_reasons.setdefault(sid, f"{Stage.VIDEO_TEXT.value}: below percentile cut")
    reports.append(
        StageReport(
            Stage.VIDEO_TEXT,
            len(current),
            len(kept),
            sorted(dropped_ids + percentile_report.dropped_ids),
        )
    )

    # stage 1 epilogue: center-frame selection for the survivors
    center_frames = {
        s.id: center_frame_index(s.frame_count)
        for s in kept
        if s.frame_count is not None
    }

    # stage 2: knowledge-intensive recaptioning
    current, kept, dropped_ids = kept, [], []
    for sample in current:
        try:
            new_caption = _retry(lambda: recaption(sample, clients.llm))
        except _DROPPABLE_ERRORS as exc:
            _drop(Stage.RECAPTION, sample.id, exc, dropped_ids)
            continue
        if new_caption is None:
            drop_reasons[sample.id] = f"{Stage.RECAPTION.value}: metadata missing"
            dropped_ids.append(sample.id)
            continue
        sample.caption = new_caption
        kept.append(sample)
    reports.append(
        StageReport(Stage.RECAPTION, len(current), len(kept), sorted(dropped_ids))
    )

    # stage 3: multimodal triplet grounding
    current, grounded, dropped_ids = kept, [], []
    for sample in current:
        try:
            video_emb = _video_emb(sample)
            result = _retry(
                lambda: ground_triplets(
                    sample.caption,
                    video_emb,
                    clients.llm,
                    clients.video_encoder,
                    config.candidate_count_hint,
                )
            )
        except _DROPPABLE_ERRORS as exc:
            _drop(Stage.GROUNDING, sample.id, exc, dropped_ids)
            continue
        grounded.append((sample, result.selected))
    reports.append(
        StageReport(Stage.GROUNDING, len(current), len(grounded), sorted(dropped_ids))
    )

    # stage 4: cross-modal description alignment + graph assembly
    graph = KnowledgeGraph()
    dropped_ids = []
    kept_pairs: list[tuple[MultimodalSample, CandidateTriplet, int, int]] = []
    for sample, candidate in grounded:
        try:
            head = normalize_surface(candidate.head)
            tail = normalize_surface(candidate.tail)
            head_alignment = _retry(
                lambda: align_descriptions(
                    head,
                    sample,
                    clients.kb,
                    clients.video_encoder,
                    clients.llm,
                    config.max_descriptions,
                )
            )
            if tail == head:
                tail_alignment = head_alignment
            else:
                tail_alignment = _retry(
                    lambda: align_descriptions(
                        tail,
                        sample,
                        clients.kb,
                        clients.video_encoder,
                        clients.llm,
                        config.max_descriptions,
                    )
                )
        except _DROPPABLE_ERRORS as exc:
            _drop(Stage.ALIGNMENT, sample.id, exc, dropped_ids)
            continue
        graph.add_sample(sample)
        graph.upsert_concept(head, head_alignment.candidates)
        graph.upsert_concept(tail, tail_alignment.candidates)
        graph.add_triplet(
            head=head,
            relation=candidate.relation,
            tail=tail,
            sample_id=sample.id,
            head_desc_idx=head_alignment.selected_index,
            tail_desc_idx=tail_alignment.selected_index,
        )
        kept_pairs.append(
            (sample, candidate, head_alignment.selected_index, tail_alignment.selected_index)
        )
    reports.append(
        StageReport(Stage.ALIGNMENT, len(grounded), len(kept_pairs), sorted(dropped_ids))
    )

    indexes = _build_triplet_indexes(graph, clients, audio_cache, video_cache, _retry)
    return PipelineResult(
        graph=graph,
        indexes=indexes,
        reports=reports,
        center_frames=center_frames,
        drop_reasons=drop_reasons,
    )


def _build_triplet_indexes(
    graph: KnowledgeGraph,
    clients: ClientBundle,
    audio_cache: dict[str, np.ndarray],
    video_cache: dict[str, np.ndarray],
    retry: Callable,
) -> dict[str, FlatIndex]:
    """One L2 index per modality (audio, video, text sentence, joint)."""
    from .graph import triplet_to_sentence

    assert clients.text_encoder is not None
    entries: dict[str, list[tuple[str, np.ndarray]]] = {
        "audio": [],
        "video": [],
        "text": [],
        "joint": [],
    }
    for triplet in graph.triplets:
        sample = graph.samples[triplet.sample_id]
        if sample.audio_uri not in audio_cache:
            audio_cache[sample.audio_uri] = retry(
                lambda: clients.audio_encoder.embed_audio(sample.audio_uri)
            )
        if sample.video_uri not in video_cache:
            video_cache[sample.video_uri] = retry(
                lambda: clients.video_encoder.embed_video(sample.video_uri)
            )
        audio_emb = audio_cache[sample.audio_uri]
        video_emb = video_cache[sample.video_uri]
        sentence_emb = retry(
            lambda: clients.text_encoder.embed_text(triplet_to_sentence(triplet))
        )
        entries["audio"].append((triplet.triplet_id, audio_emb))
        entries["video"].append((triplet.triplet_id, video_emb))
        entries["text"].append((triplet.triplet_id, sentence_emb))
        entries["joint"].append(
            (triplet.triplet_id, joint_embedding(audio_emb, video_emb).values)
        )

    if graph.triplets:
        return {name: build_index(rows, Metric.L2) for name, rows in entries.items()}

    audio_dim = clients.audio_encoder.meta().dims.get("audio", 2)
    video_dim = clients.video_encoder.meta().dims.get("video", 2)
    text_dim = clients.text_encoder.meta().dims.get("text", 2)
    dims = {
        "audio": audio_dim,
        "video": video_dim,
        "text": text_dim,
        "joint": audio_dim + video_dim,
    }
    return {
        name: FlatIndex(
            metric=Metric.L2,
            dim=dim,
            entry_ids=[],
            matrix=np.empty((0, dim), dtype=np.float32),
        )
        for name, dim in dims.items()
    }


# --- stage report persistence ------------------------------------------------------


def reports_to_json_doc(reports: Sequence[StageReport]) -> dict:
    return {
        "stages": [
            {
                "stage": r.stage.value,
                "input": r.input_count,
                "kept": r.kept_count,
                "dropped_ids": list(r.dropped_ids),
            }
            for r in reports
        ]
    }


def save_stage_reports(reports: Sequence[StageReport], path: str | Path) -> None:
    doc = reports_to_json_doc(reports)
    data = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"
    try:
        Path(path).write_text(data, encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write stage reports to {path}: {exc}") from exc


def load_stage_reports(path: str | Path) -> list[StageReport]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"cannot read stage reports from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StorageError(f"{path} is not valid JSON: {exc}") from exc
    reports = []
    try:
        for row in doc["stages"]:
            reports.append(
                StageReport(
                    stage=Stage(row["stage"]),
                    input_count=row["input"],
                    kept_count=row["kept"],
                    dropped_ids=list(row["dropped_ids"]),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise StorageError(f"{path} has a malformed stage record: {exc}") from exc
    return reports
