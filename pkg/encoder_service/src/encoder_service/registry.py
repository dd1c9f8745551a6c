"""Model registry: owns the loaded heads and answers embedding requests.

The /meta dims are taken from the loaded checkpoints, so every /embed
response dim agrees with /meta by construction. Inference is serialized
with a lock; torch eval-mode forward passes are deterministic, so
repeated identical requests return identical vectors.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
import torch

from . import features
from .models import TAG_VOCABULARY, load_heads

EMBED_KINDS = ("text", "audio", "video", "image", "video_conditioned")


@dataclass
class RegistryConfig:
    weights_dir: str
    family: str = "video"
    normalize: bool = True
    media_root: str | None = None
    num_frames: int = features.DEFAULT_NUM_FRAMES
    conditioning_scale: float = 8.0


@dataclass
class ModelRegistry:
    config: RegistryConfig
    _heads: dict = field(default_factory=dict, init=False)
    _tagger: object = field(default=None, init=False)
    _dims: dict = field(default_factory=dict, init=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False)
    ready: bool = field(default=False, init=False)

    def load(self) -> None:
        heads, tagger, dims = load_heads(self.config.weights_dir)
        self._heads, self._tagger, self._dims = heads, tagger, dims
        self.ready = True

    @property
    def dims(self) -> dict[str, int]:
        return dict(self._dims)

    def _project(self, kind: str, feats: np.ndarray) -> np.ndarray:
        tensor = torch.from_numpy(np.ascontiguousarray(feats, dtype=np.float32))
        with self._lock, torch.no_grad():
            out = self._heads[kind](tensor)
        return out.numpy().astype(np.float32)

    def _finish(self, vec: np.ndarray) -> np.ndarray:
        if self.config.normalize:
            norm = float(np.linalg.norm(vec.astype(np.float64)))
            if norm > 0.0:
                vec = (vec.astype(np.float64) / norm).astype(np.float32)
        return vec

    def _media(self, uri: str) -> bytes:
        return features.resolve_media_bytes(uri, self.config.media_root)

    def embed(
        self,
        kind: str,
        payload: str,
        frame_index: int | None = None,
        concept: str | None = None,
    ) -> np.ndarray:
        if kind == "text":
            return self._finish(self._project("text", features.text_features(payload)))
        if kind == "audio":
            return self._finish(
                self._project("audio", features.media_features(self._media(payload)))
            )
        if kind == "video":
            frames = features.frame_features(self._media(payload), self.config.num_frames)
            frame_embs = self._project("video", frames)
            return self._finish(frame_embs.mean(axis=0))
        if kind == "image":
            frames = features.frame_features(self._media(payload), self.config.num_frames)
            row = (frame_index or 0) % self.config.num_frames
            return self._finish(self._project("image", frames[row]))
        if kind == "video_conditioned":
            return self._finish(self._conditioned(payload, concept or ""))
        raise ValueError(f"unknown embedding kind {kind!r}")

    def _conditioned(self, uri: str, concept: str) -> np.ndarray:
        """Relevance-weighted frame pooling against the concept embedding.

        Frame embeddings are scored by inner product with the concept's
        text embedding; a softmax over the scores weights the pooled
        video representation toward concept-relevant frames.
        """
        frames = features.frame_features(self._media(uri), self.config.num_frames)
        frame_embs = self._project("video", frames).astype(np.float64)
        concept_emb = self._project("text", features.text_features(concept)).astype(np.float64)
        norms = np.linalg.norm(frame_embs, axis=1) * max(
            1e-12, float(np.linalg.norm(concept_emb))
        )
        scores = (frame_embs @ concept_emb) / np.maximum(norms, 1e-12)
        scaled = self.config.conditioning_scale * scores
        weights = np.exp(scaled - scaled.max())
        weights = weights / weights.sum()
        return (weights[:, None] * frame_embs).sum(axis=0).astype(np.float32)

    def tag_audio(self, uri: str) -> list[str]:
        feats = features.media_features(self._media(uri))
        logits = self._project_tagger(feats)
        order = sorted(
            range(len(TAG_VOCABULARY)), key=lambda i: (-logits[i], TAG_VOCABULARY[i])
        )
        return [TAG_VOCABULARY[i] for i in order[:5]]

    def _project_tagger(self, feats: np.ndarray) -> np.ndarray:
        tensor = torch.from_numpy(np.ascontiguousarray(feats, dtype=np.float32))
        with self._lock, torch.no_grad():
            out = self._tagger(tensor)
        return out.numpy().astype(np.float64)
