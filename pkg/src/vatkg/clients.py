"""Wire contracts for encoder, LLM and knowledge-base services, plus
fully deterministic in-process mocks.

The mock and HTTP implementations are interchangeable behind the same
call signatures: the whole construction pipeline and the RAG layer run
against either. Mocks never touch the network and produce bit-identical
outputs on every platform.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .errors import (
    BadStatusError,
    SchemaError,
    UnreachableError,
    UnscriptedPromptError,
    WrongTagCountError,
    ZeroDimError,
)
from .graph import Source
from .hashing import SplitMix64, fnv1a64
from .prompts import (
    DESCRIPTION_HEADER,
    RECAPTION_HEADER,
    TRIPLET_HEADER,
)

EMBED_KINDS = ("text", "audio", "video", "image", "video_conditioned")


@dataclass(frozen=True)
class EncoderMeta:
    """Advertised dimensions per embedding kind and the model family."""

    dims: dict[str, int]
    family: str


class EncoderClient(Protocol):
    def embed_text(self, text: str) -> np.ndarray: ...

    def embed_audio(self, uri: str) -> np.ndarray: ...

    def embed_video(self, uri: str) -> np.ndarray: ...

    def embed_image(self, uri: str, frame_index: int) -> np.ndarray: ...

    def embed_video_conditioned(self, uri: str, concept: str) -> np.ndarray: ...

    def tag_audio(self, uri: str) -> list[str]: ...

    def meta(self) -> EncoderMeta: ...


class LlmClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class KbClient(Protocol):
    def fetch(self, concept: str, source: Source) -> list[str]: ...


# --- deterministic mocks -------------------------------------------------------


def mock_embed(kind: str, payload: str, dim: int) -> np.ndarray:
    """Deterministic pseudo-embedding: unit vector seeded by (kind, payload).

    seed = FNV-1a-64 over "{kind}\\x1f{payload}", expanded through a
    splitmix64 stream whose words map to [-1, 1]. Identical inputs give
    bitwise-identical float32 vectors on any IEEE-754 platform.
    """
    if dim < 2:
        raise ZeroDimError(f"mock embedding dim must be >= 2, got {dim}")
    seed = fnv1a64(f"{kind}\x1f{payload}".encode("utf-8"))
    stream = SplitMix64(seed)
    values = np.fromiter(
        (2.0 * stream.next_unit_interval() - 1.0 for _ in range(dim)),
        dtype=np.float64,
        count=dim,
    )
    norm = float(np.linalg.norm(values))
    if norm == 0.0:  # unreachable in practice, kept for determinism
        values[0] = 1.0
        norm = 1.0
    return (values / norm).astype(np.float32)


_DEFAULT_TAG_VOCAB = (
    "speech",
    "music",
    "dog",
    "engine",
    "water",
    "wind",
    "birdsong",
    "crowd",
    "applause",
    "guitar",
    "siren",
    "rain",
)

DEFAULT_MOCK_DIMS = {
    "text": 16,
    "audio": 16,
    "video": 16,
    "image": 16,
    "video_conditioned": 16,
}


class MockEncoder:
    """In-process encoder with the same surface as the HTTP client.

    `salt`, when set, prefixes the hashing kind so two mock instances act
    as distinct model families with unrelated embedding spaces. Audio
    tags come from `tags_script` when the uri is scripted, otherwise from
    a deterministic draw over a fixed vocabulary.
    """

    def __init__(
        self,
        family: str = "video",
        dims: Mapping[str, int] | None = None,
        salt: str = "",
        tags_script: Mapping[str, Sequence[str]] | None = None,
    ) -> None:
        self.family = family
        self.dims = dict(dims or DEFAULT_MOCK_DIMS)
        self.salt = salt
        self.tags_script = {k: list(v) for k, v in (tags_script or {}).items()}

    def _kind(self, kind: str) -> str:
        return f"{self.salt}:{kind}" if self.salt else kind

    def _embed(self, kind: str, payload: str) -> np.ndarray:
        return mock_embed(self._kind(kind), payload, self.dims[kind])

    def embed_text(self, text: str) -> np.ndarray:
        return self._embed("text", text)

    def embed_audio(self, uri: str) -> np.ndarray:
        return self._embed("audio", uri)

    def embed_video(self, uri: str) -> np.ndarray:
        return self._embed("video", uri)

    def embed_image(self, uri: str, frame_index: int) -> np.ndarray:
        return self._embed("image", f"{uri}#frame={frame_index}")

    def embed_video_conditioned(self, uri: str, concept: str) -> np.ndarray:
        return self._embed("video_conditioned", f"{uri}\x1f{concept}")

    def tag_audio(self, uri: str) -> list[str]:
        scripted = self.tags_script.get(uri)
        if scripted is not None:
            if len(scripted) != 5:
                raise WrongTagCountError(
                    f"scripted tags for {uri!r} must number 5, got {len(scripted)}"
                )
            return list(scripted)
        stream = SplitMix64(fnv1a64(f"{self._kind('tags')}\x1f{uri}".encode("utf-8")))
        pool = list(_DEFAULT_TAG_VOCAB)
        tags = []
        for _ in range(5):
            tags.append(pool.pop(stream.next_word() % len(pool)))
        return tags

    def meta(self) -> EncoderMeta:
        return EncoderMeta(dims=dict(self.dims), family=self.family)


class ScriptedLlm:
    """Pattern-scripted LLM: the first matching pattern's response wins.

    Responses may be plain strings or callables receiving the full
    prompt. Every completed prompt is appended to `calls`, so tests can
    assert that a source was (or was not) queried.
    """

    def __init__(self, script: Mapping[str, str | Callable[[str], str]]) -> None:
        if not script:
            raise ValueError("script must contain at least one pattern")
        self.script = dict(script)
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        for pattern, response in self.script.items():
            if re.search(pattern, prompt, re.DOTALL):
                return response(prompt) if callable(response) else response
        raise UnscriptedPromptError(
            f"no scripted pattern matches prompt starting {prompt[:60]!r}"
        )


class EchoLlm:
    """Returns the prompt verbatim; handy for end-to-end assertions."""

    def __init__(self) -> None:
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        return prompt


class InMemoryKb:
    """Knowledge base backed by plain dicts, with stable list ordering."""

    def __init__(
        self,
        wikipedia: Mapping[str, Sequence[str]] | None = None,
        wiktionary: Mapping[str, Sequence[str]] | None = None,
    ) -> None:
        self._data = {
            Source.WIKIPEDIA: {k: list(v) for k, v in (wikipedia or {}).items()},
            Source.WIKTIONARY: {k: list(v) for k, v in (wiktionary or {}).items()},
        }

    def fetch(self, concept: str, source: Source) -> list[str]:
        return list(self._data.get(source, {}).get(concept, []))


class FixtureKb:
    """Knowledge base reading {wikipedia,wiktionary}.json from a directory.

    Each file maps concept -> list of description strings, which keeps
    construction tests fully offline.
    """

    _FILES = {Source.WIKIPEDIA: "wikipedia.json", Source.WIKTIONARY: "wiktionary.json"}

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._cache: dict[Source, dict[str, list[str]]] = {}

    def _load(self, source: Source) -> dict[str, list[str]]:
        if source not in self._cache:
            path = self.root / self._FILES[source]
            if path.exists():
                self._cache[source] = json.loads(path.read_text(encoding="utf-8"))
            else:
                self._cache[source] = {}
        return self._cache[source]

    def fetch(self, concept: str, source: Source) -> list[str]:
        return list(self._load(source).get(concept, []))


def default_mock_llm() -> ScriptedLlm:
    """Generic deterministic LLM covering every construction template.

    Used by the CLI's --mock-clients mode so arbitrary manifests run
    offline: recaptioning folds the title into the caption, triplet
    extraction pairs caption words, and definitions are boilerplate.
    """

    def _field(prompt: str, name: str) -> str:
        # templates may carry example lines; the real input is the last one
        matches = re.findall(rf"^{name}: (.*)$", prompt, re.MULTILINE)
        return matches[-1].strip() if matches else ""

    def recaption(prompt: str) -> str:
        caption = _field(prompt, "Caption")
        title = _field(prompt, "Title")
        return f"{caption} ({title})" if title else caption

    def triplets(prompt: str) -> str:
        caption = _field(prompt, "Caption")
        words = [w for w in re.split(r"\W+", caption) if len(w) > 2]
        if not words:
            words = ["scene"]
        if len(words) == 1:
            return f"({words[0]}; IsA; concept)"
        lines = []
        for i in range(min(3, len(words) - 1)):
            lines.append(f"({words[i]}; appears with; {words[i + 1]})")
        return "\n".join(lines)

    def definition(prompt: str) -> str:
        concept = _field(prompt, "Concept")
        return f"A {concept} is a recurring concept in this corpus."

    return ScriptedLlm(
        {
            re.escape(RECAPTION_HEADER): recaption,
            re.escape(TRIPLET_HEADER): triplets,
            re.escape(DESCRIPTION_HEADER): definition,
        }
    )


# --- HTTP clients --------------------------------------------------------------


def _request_json(
    method: str,
    url: str,
    endpoint: str,
    payload: dict | None = None,
    timeout: float = 30.0,
    attempts: int = 3,
    backoff: float = 0.25,
) -> dict:
    """JSON request with timeouts and exponential-backoff retries.

    Connection failures and 5xx responses are retried `attempts` times;
    other non-2xx statuses fail immediately. All errors name the
    endpoint that produced them.
    """
    import requests

    last_exc: Exception | None = None
    for attempt in range(attempts):
        try:
            resp = requests.request(method, url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_exc = exc
            if attempt + 1 < attempts:
                time.sleep(backoff * (2**attempt))
            continue
        if 200 <= resp.status_code < 300:
            try:
                doc = resp.json()
            except ValueError as exc:
                raise SchemaError(f"{endpoint}: response is not JSON") from exc
            if not isinstance(doc, dict):
                raise SchemaError(f"{endpoint}: response must be a JSON object")
            return doc
        if resp.status_code >= 500 and attempt + 1 < attempts:
            last_exc = BadStatusError(f"{endpoint}: status {resp.status_code}")
            time.sleep(backoff * (2**attempt))
            continue
        raise BadStatusError(f"{endpoint}: status {resp.status_code}")
    if isinstance(last_exc, BadStatusError):
        raise last_exc
    raise UnreachableError(f"{endpoint}: {last_exc}") from last_exc


class HttpEncoderClient:
    """Encoder client speaking the JSON-over-HTTP contract.

    POST /embed {"kind", "payload", "frame_index"?, "concept"?}
    POST /tags  {"uri"}
    GET  /meta
    """

    def __init__(self, base_url: str, timeout: float = 30.0, backoff: float = 0.25) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.backoff = backoff
        self._meta: EncoderMeta | None = None

    def _embed(self, body: dict) -> np.ndarray:
        doc = _request_json(
            "POST",
            f"{self.base_url}/embed",
            "/embed",
            body,
            timeout=self.timeout,
            backoff=self.backoff,
        )
        try:
            dim = int(doc["dim"])
            values = np.asarray(doc["values"], dtype=np.float32)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"/embed: malformed response: {exc}") from exc
        if values.ndim != 1 or values.shape[0] != dim:
            raise SchemaError(f"/embed: {values.shape[0]} values for declared dim {dim}")
        if not np.all(np.isfinite(values)):
            raise SchemaError("/embed: response contains non-finite values")
        return values

    def embed_text(self, text: str) -> np.ndarray:
        return self._embed({"kind": "text", "payload": text})

    def embed_audio(self, uri: str) -> np.ndarray:
        return self._embed({"kind": "audio", "payload": uri})

    def embed_video(self, uri: str) -> np.ndarray:
        return self._embed({"kind": "video", "payload": uri})

    def embed_image(self, uri: str, frame_index: int) -> np.ndarray:
        return self._embed({"kind": "image", "payload": uri, "frame_index": frame_index})

    def embed_video_conditioned(self, uri: str, concept: str) -> np.ndarray:
        return self._embed(
            {"kind": "video_conditioned", "payload": uri, "concept": concept}
        )

    def tag_audio(self, uri: str) -> list[str]:
        doc = _request_json(
            "POST",
            f"{self.base_url}/tags",
            "/tags",
            {"uri": uri},
            timeout=self.timeout,
            backoff=self.backoff,
        )
        tags = doc.get("tags")
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise SchemaError("/tags: response must carry a list of tag strings")
        if len(tags) != 5:
            raise WrongTagCountError(f"/tags: expected 5 tags, got {len(tags)}")
        return tags

    def meta(self) -> EncoderMeta:
        if self._meta is None:
            doc = _request_json(
                "GET",
                f"{self.base_url}/meta",
                "/meta",
                timeout=self.timeout,
                backoff=self.backoff,
            )
            dims = doc.get("dims")
            family = doc.get("family")
            if not isinstance(dims, dict) or not isinstance(family, str):
                raise SchemaError("/meta: response must carry dims object and family")
            try:
                dims = {k: int(v) for k, v in dims.items()}
            except (TypeError, ValueError) as exc:
                raise SchemaError("/meta: dims must be integers") from exc
            self._meta = EncoderMeta(dims=dims, family=family)
        return self._meta


class HttpLlmClient:
    """LLM client for the non-streaming POST /complete contract."""

    def __init__(self, base_url: str, timeout: float = 60.0, backoff: float = 0.25) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.backoff = backoff

    def complete(self, prompt: str) -> str:
        doc = _request_json(
            "POST",
            f"{self.base_url}/complete",
            "/complete",
            {"prompt": prompt},
            timeout=self.timeout,
            backoff=self.backoff,
        )
        text = doc.get("text")
        if not isinstance(text, str):
            raise SchemaError("/complete: response must carry a text string")
        return text


class LiveKb:
    """Best-effort Wikipedia/Wiktionary REST client.

    Network crawling has no well-defined failure semantics (rate limits,
    disambiguation pages); tests use the fixture clients instead.
    """

    def __init__(self, timeout: float = 15.0) -> None:
        self.timeout = timeout

    def fetch(self, concept: str, source: Source) -> list[str]:
        title = concept.replace(" ", "_")
        if source is Source.WIKIPEDIA:
            url = f"https://en.wikipedia.org/api/rest_v1/page/summary/{title}"
            try:
                doc = _request_json("GET", url, "/page/summary", timeout=self.timeout)
            except (UnreachableError, BadStatusError, SchemaError):
                return []
            extract = doc.get("extract")
            return [extract] if isinstance(extract, str) and extract else []
        if source is Source.WIKTIONARY:
            url = f"https://en.wiktionary.org/api/rest_v1/page/definition/{title}"
            try:
                doc = _request_json("GET", url, "/page/definition", timeout=self.timeout)
            except (UnreachableError, BadStatusError, SchemaError):
                return []
            out: list[str] = []
            for entries in doc.values():
                if not isinstance(entries, list):
                    continue
                for entry in entries:
                    for definition in entry.get("definitions", []):
                        text = re.sub(r"<[^>]+>", "", definition.get("definition", "")).strip()
                        if text:
                            out.append(text)
            return out
        return []


@dataclass
class ClientBundle:
    """Everything the pipeline and RAG layer call out to.

    `text_encoder` defaults to the video-family encoder so triplet
    sentences, text queries and the checker share one embedding space;
    `generator` defaults to the construction LLM.
    """

    audio_encoder: EncoderClient
    video_encoder: EncoderClient
    llm: LlmClient
    kb: KbClient
    text_encoder: EncoderClient | None = None
    generator: LlmClient | None = None

    def __post_init__(self) -> None:
        if self.text_encoder is None:
            self.text_encoder = self.video_encoder
        if self.generator is None:
            self.generator = self.llm


def mock_bundle(
    llm: LlmClient | None = None,
    kb: KbClient | None = None,
    audio_tags: Mapping[str, Sequence[str]] | None = None,
    audio_dim: int = 16,
    video_dim: int = 16,
) -> ClientBundle:
    """Bundle of deterministic mocks; the CLI's --mock-clients wiring."""
    audio = MockEncoder(
        family="audio",
        dims={"text": audio_dim, "audio": audio_dim},
        salt="audio-family",
        tags_script=audio_tags,
    )
    video = MockEncoder(
        family="video",
        dims={
            "text": video_dim,
            "video": video_dim,
            "image": video_dim,
            "video_conditioned": video_dim,
        },
        salt="video-family",
    )
    return ClientBundle(
        audio_encoder=audio,
        video_encoder=video,
        llm=llm or default_mock_llm(),
        kb=kb or InMemoryKb(),
        generator=EchoLlm(),
    )
