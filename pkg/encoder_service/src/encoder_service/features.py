"""Deterministic feature extraction feeding the projection heads.

Text becomes hashed character-trigram counts; media URIs become byte
statistics, either of the referenced local file (when it resolves under
the configured media root) or of a synthetic byte stream derived from
the URI itself, so the service also works with opaque URIs. Videos are
treated as a sequence of frames by chunking the byte stream.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

TEXT_FEATURE_DIM = 512
MEDIA_FEATURE_DIM = 256 + 8  # byte histogram + moment summary
DEFAULT_NUM_FRAMES = 8

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def text_features(text: str) -> np.ndarray:
    """Hashed char-trigram bag, log-scaled, L2-normalized."""
    counts = np.zeros(TEXT_FEATURE_DIM, dtype=np.float64)
    padded = f"\x02{text}\x03"
    for i in range(len(padded) - 2):
        trigram = padded[i : i + 3]
        counts[_fnv1a64(trigram.encode("utf-8")) % TEXT_FEATURE_DIM] += 1.0
    feats = np.log1p(counts)
    norm = float(np.linalg.norm(feats))
    if norm == 0.0:
        feats[0] = 1.0
        norm = 1.0
    return (feats / norm).astype(np.float32)


def _synthetic_bytes(uri: str, length: int = 4096) -> bytes:
    """Reproducible pseudo-media for URIs that do not resolve to a file."""
    out = bytearray()
    state = _fnv1a64(uri.encode("utf-8"))
    while len(out) < length:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out += (z ^ (z >> 31)).to_bytes(8, "little")
    return bytes(out[:length])


def resolve_media_bytes(uri: str, media_root: str | None) -> bytes:
    """File bytes when the URI resolves under media_root, else synthetic."""
    if media_root is not None:
        candidate = Path(media_root) / uri.split("://", 1)[-1].lstrip("/")
        if candidate.is_file():
            return candidate.read_bytes()
    return _synthetic_bytes(uri)


def _byte_stats(data: bytes) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
    if arr.size == 0:
        arr = np.zeros(1, dtype=np.float64)
    hist = np.bincount(arr.astype(np.intp), minlength=256).astype(np.float64)
    hist = hist / max(1.0, float(arr.size))
    moments = np.array(
        [
            arr.mean() / 255.0,
            arr.std() / 255.0,
            float(np.median(arr)) / 255.0,
            arr.min() / 255.0,
            arr.max() / 255.0,
            float(np.mean(np.abs(np.diff(arr)))) / 255.0 if arr.size > 1 else 0.0,
            (arr.size % 99991) / 99991.0,
            1.0,
        ],
        dtype=np.float64,
    )
    feats = np.concatenate([hist, moments])
    norm = float(np.linalg.norm(feats))
    return (feats / norm).astype(np.float32)


def media_features(data: bytes) -> np.ndarray:
    return _byte_stats(data)


def frame_features(data: bytes, num_frames: int) -> np.ndarray:
    """(num_frames, MEDIA_FEATURE_DIM): per-chunk byte statistics."""
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    chunk = max(1, len(data) // num_frames)
    frames = []
    for i in range(num_frames):
        piece = data[i * chunk : (i + 1) * chunk] or data[-chunk:] or b"\x00"
        frames.append(_byte_stats(piece))
    return np.stack(frames)
