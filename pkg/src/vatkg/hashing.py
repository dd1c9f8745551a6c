"""Deterministic 64-bit hashing primitives.

FNV-1a seeds triplet ids, index-file checksums and the mock embedder;
splitmix64 expands one seed into a reproducible word stream. Both are
fixed-width integer algorithms, so results are identical on every
platform regardless of the host's hash randomization.
"""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, seed: int = _FNV_OFFSET) -> int:
    """Hash `data` with 64-bit FNV-1a, returning an unsigned 64-bit int."""
    h = seed & _MASK64
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def fnv1a64_hex(data: bytes) -> str:
    """Lowercase, zero-padded 16-char hex form of :func:`fnv1a64`."""
    return f"{fnv1a64(data):016x}"


class SplitMix64:
    """splitmix64 stream seeded by a 64-bit state."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_word(self) -> int:
        """Return the next unsigned 64-bit word of the stream."""
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_unit_interval(self) -> float:
        """Next float in [0, 1) with 53 bits of precision."""
        return (self.next_word() >> 11) * (1.0 / (1 << 53))
