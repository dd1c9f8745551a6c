"""Fixed-dimension embedding vectors and exact flat similarity search.

The index is a deliberate linear scan: at the corpus sizes this package
targets, exactness is worth more than speed, and it keeps the brute-force
oracle tests meaningful. Scores are accumulated in float64 and payloads
stored as float32, which bounds cross-platform drift.

Threshold semantics are strict: an L2 hit must score *below* the
threshold, a similarity hit *above* it. Boundary values are excluded.
Ties on score break by ascending entry id so results are deterministic
across platforms.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumMismatchError,
    DimMismatchError,
    DuplicateIdError,
    EmptyEntriesError,
    InvalidKError,
    SchemaVersionMismatchError,
    StorageError,
    ZeroVectorError,
)
from .hashing import fnv1a64

_MAGIC = b"VKGIDX1\x00"
_SCHEMA_VERSION = 1


class Metric(enum.Enum):
    """Similarity metric fixed per index at build time."""

    L2 = 0
    INNER_PRODUCT = 1
    COSINE = 2

    @property
    def lower_is_better(self) -> bool:
        return self is Metric.L2


@dataclass(frozen=True)
class RetrievalHit:
    """One ranked search result: distance for L2, similarity otherwise."""

    entry_id: str
    score: float


def as_vector(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Coerce to a finite 1-D float32 vector."""
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1 or vec.size == 0:
        raise DimMismatchError(f"expected a non-empty 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ZeroVectorError("vector contains non-finite values")
    return vec


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimMismatchError(f"dims differ: {a.shape[0]} vs {b.shape[0]}")


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity a.b / (|a||b|), clamped to [-1, 1]."""
    va = as_vector(a).astype(np.float64)
    vb = as_vector(b).astype(np.float64)
    _check_same_dim(va, vb)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine is undefined for an all-zero vector")
    value = float(np.dot(va, vb) / (na * nb))
    return min(1.0, max(-1.0, value))


def l2_distance(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Euclidean distance between two same-dimension vectors."""
    va = as_vector(a).astype(np.float64)
    vb = as_vector(b).astype(np.float64)
    _check_same_dim(va, vb)
    return float(np.linalg.norm(va - vb))


def normalize(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Scale `v` to unit length; float32 output, float64 accumulation."""
    vec = as_vector(v).astype(np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroVectorError("cannot normalize an all-zero vector")
    return (vec / norm).astype(np.float32)


@dataclass(frozen=True)
class JointEmbedding:
    """Audio-then-video concatenation used for audio-visual queries.

    Each half is unit-normalized before concatenation so neither modality
    dominates by scale; the concatenation itself is NOT renormalized, so
    the joint vector of two nonzero inputs has norm sqrt(2).
    """

    values: np.ndarray
    dim_audio: int
    dim_video: int


def joint_embedding(
    audio: Sequence[float] | np.ndarray, video: Sequence[float] | np.ndarray
) -> JointEmbedding:
    """Normalize each modality then concatenate audio-first."""
    a = normalize(audio)
    v = normalize(video)
    return JointEmbedding(
        values=np.concatenate([a, v]),
        dim_audio=int(a.shape[0]),
        dim_video=int(v.shape[0]),
    )


class FlatIndex:
    """Immutable exact-search index over (entry_id, vector) pairs.

    Searching is a full scan, identical in results to a naive
    compute-sort-filter pass. Safe for concurrent readers once built.
    """

    def __init__(self, metric: Metric, dim: int, entry_ids: list[str], matrix: np.ndarray):
        self.metric = metric
        self.dim = dim
        self._entry_ids = entry_ids
        self._ids_arr = np.array(entry_ids)
        self._matrix = matrix  # (n, dim) float32

    def __len__(self) -> int:
        return len(self._entry_ids)

    @property
    def entry_ids(self) -> list[str]:
        return list(self._entry_ids)

    def vector_for(self, entry_id: str) -> np.ndarray:
        """Back out the stored vector for one entry id."""
        try:
            row = self._entry_ids.index(entry_id)
        except ValueError:
            raise KeyError(entry_id) from None
        return np.array(self._matrix[row])

    def _scores(self, query: np.ndarray) -> np.ndarray:
        mat = self._matrix.astype(np.float64)
        q = query.astype(np.float64)
        if self.metric is Metric.L2:
            diff = mat - q
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        if self.metric is Metric.INNER_PRODUCT:
            return mat @ q
        # cosine: guard zero rows/queries the same way the scalar op does
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise ZeroVectorError("cosine search with an all-zero query")
        row_norms = np.linalg.norm(mat, axis=1)
        if np.any(row_norms == 0.0):
            raise ZeroVectorError("cosine index contains an all-zero entry")
        return np.clip((mat @ q) / (row_norms * qn), -1.0, 1.0)

    def search(
        self, query: Sequence[float] | np.ndarray, k: int, threshold: float | None = None
    ) -> list[RetrievalHit]:
        """Best-first hits: up to `k`, strictly inside `threshold` if given."""
        if k < 1:
            raise InvalidKError(f"k must be >= 1, got {k}")
        q = as_vector(query)
        if q.shape[0] != self.dim:
            raise DimMismatchError(f"query dim {q.shape[0]} != index dim {self.dim}")
        scores = self._scores(q)
        if threshold is not None:
            mask = scores < threshold if self.metric.lower_is_better else scores > threshold
        else:
            mask = np.ones(len(scores), dtype=bool)
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            return []
        sub_scores = scores[idx]
        sort_key = sub_scores if self.metric.lower_is_better else -sub_scores
        order = np.lexsort((self._ids_arr[idx], sort_key))[:k]
        chosen = idx[order]
        return [
            RetrievalHit(entry_id=self._entry_ids[i], score=float(scores[i])) for i in chosen
        ]


def build_index(
    entries: Iterable[tuple[str, Sequence[float] | np.ndarray]], metric: Metric
) -> FlatIndex:
    """Validate entries (uniform dim, unique ids) and freeze an index."""
    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim: int | None = None
    for entry_id, values in entries:
        if entry_id in seen:
            raise DuplicateIdError(f"duplicate entry id {entry_id!r}")
        seen.add(entry_id)
        vec = as_vector(values)
        if dim is None:
            dim = int(vec.shape[0])
        elif vec.shape[0] != dim:
            raise DimMismatchError(
                f"entry {entry_id!r} has dim {vec.shape[0]}, expected {dim}"
            )
        ids.append(entry_id)
        rows.append(vec)
    if dim is None:
        raise EmptyEntriesError("cannot build an index from zero entries")
    return FlatIndex(metric=metric, dim=dim, entry_ids=ids, matrix=np.stack(rows))


# --- binary persistence -------------------------------------------------------
#
# Little-endian layout:
#   magic "VKGIDX1\0" | u32 version=1 | u8 metric tag | u32 dim | u64 count
#   count * [u32 id_len | id bytes UTF-8 | dim * f32]
#   u64 FNV-1a checksum over all preceding bytes


def save_index(index: FlatIndex, path: str | Path) -> None:
    """Write the index in the binary format documented above."""
    buf = bytearray()
    buf += _MAGIC
    buf += struct.pack("<I", _SCHEMA_VERSION)
    buf += struct.pack("<B", index.metric.value)
    buf += struct.pack("<I", index.dim)
    buf += struct.pack("<Q", len(index))
    for entry_id, row in zip(index._entry_ids, index._matrix):
        id_bytes = entry_id.encode("utf-8")
        buf += struct.pack("<I", len(id_bytes))
        buf += id_bytes
        buf += row.astype("<f4").tobytes()
    buf += struct.pack("<Q", fnv1a64(bytes(buf)))
    try:
        Path(path).write_bytes(bytes(buf))
    except OSError as exc:
        raise StorageError(f"cannot write index to {path}: {exc}") from exc


def load_index(path: str | Path) -> FlatIndex:
    """Read an index file, verifying magic, version and checksum."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read index from {path}: {exc}") from exc
    if len(raw) < len(_MAGIC) or raw[: len(_MAGIC)] != _MAGIC:
        raise BadMagicError(f"{path} is not an index file (bad magic)")
    if len(raw) < len(_MAGIC) + 4 + 1 + 4 + 8 + 8:
        raise ChecksumMismatchError(f"{path} is truncated")
    body, (declared,) = raw[:-8], struct.unpack("<Q", raw[-8:])
    if fnv1a64(body) != declared:
        raise ChecksumMismatchError(f"{path} failed its checksum")
    off = len(_MAGIC)
    (version,) = struct.unpack_from("<I", body, off)
    off += 4
    if version != _SCHEMA_VERSION:
        raise SchemaVersionMismatchError(f"{path} declares index schema {version}")
    (metric_tag,) = struct.unpack_from("<B", body, off)
    off += 1
    try:
        metric = Metric(metric_tag)
    except ValueError:
        raise ChecksumMismatchError(f"{path} carries unknown metric tag {metric_tag}") from None
    (dim,) = struct.unpack_from("<I", body, off)
    off += 4
    (count,) = struct.unpack_from("<Q", body, off)
    off += 8
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    vec_bytes = dim * 4
    for i in range(count):
        if off + 4 > len(body):
            raise ChecksumMismatchError(f"{path} record table is truncated")
        (id_len,) = struct.unpack_from("<I", body, off)
        off += 4
        if off + id_len + vec_bytes > len(body):
            raise ChecksumMismatchError(f"{path} record table is truncated")
        ids.append(body[off : off + id_len].decode("utf-8"))
        off += id_len
        rows[i] = np.frombuffer(body, dtype="<f4", count=dim, offset=off)
        off += vec_bytes
    if off != len(body):
        raise ChecksumMismatchError(f"{path} has trailing bytes after the record table")
    return FlatIndex(metric=metric, dim=int(dim), entry_ids=ids, matrix=rows)
