"""Exception types shared across the package.

Every error raised by this package derives from :class:`VatkgError`, so
callers can catch one base class at the CLI boundary and map subtypes to
exit codes.
"""

from __future__ import annotations


class VatkgError(Exception):
    """Base class for all package errors."""


# --- vector / index errors ---------------------------------------------------

class DimMismatchError(VatkgError):
    """Two vectors (or a query and an index) disagree on dimension."""


class ZeroVectorError(VatkgError):
    """An operation requiring a nonzero vector received an all-zero one."""


class DuplicateIdError(VatkgError):
    """An index was built with a repeated entry id."""


class EmptyEntriesError(VatkgError):
    """An index was built with no entries."""


class InvalidKError(VatkgError):
    """A search was requested with k < 1."""


class ZeroDimError(VatkgError):
    """A mock embedding was requested with an unusably small dimension."""


class BadMagicError(VatkgError):
    """An index file does not start with the expected magic bytes."""


class ChecksumMismatchError(VatkgError):
    """An index file's trailing checksum does not match its contents."""


# --- graph errors ------------------------------------------------------------

class EmptyCandidateListError(VatkgError):
    """A concept was upserted with no candidate descriptions."""


class TooManyCandidatesError(VatkgError):
    """A concept was upserted with more than the allowed candidates."""


class UnknownConceptError(VatkgError):
    """A triplet references a concept surface not present in the graph."""


class UnknownSampleError(VatkgError):
    """A triplet references a sample id not present in the graph."""


class DescriptionIndexOutOfRangeError(VatkgError):
    """A triplet's description index does not point into the candidate list."""


class SchemaVersionMismatchError(VatkgError):
    """A persisted artifact declares a schema this code does not speak."""


class InvariantViolationOnLoadError(VatkgError):
    """A loaded graph fails referential-integrity or cardinality checks."""


class StorageError(VatkgError):
    """Reading or writing a persisted artifact failed at the I/O level."""


# --- pipeline errors ---------------------------------------------------------

class WrongTagCountError(VatkgError):
    """An audio tagger returned something other than exactly five tags."""


class ZeroFramesError(VatkgError):
    """Center-frame selection was asked about a zero-frame video."""


class ManifestParseError(VatkgError):
    """The corpus manifest is malformed (bad JSON, missing fields, dup ids)."""


class EmptyCompletionError(VatkgError):
    """The LLM returned an empty completion where text was required."""


class NoCandidatesParsedError(VatkgError):
    """No candidate triplet could be parsed from an LLM completion."""


class AllSourcesFailedError(VatkgError):
    """No knowledge source produced a single description for a concept."""


# --- client errors -----------------------------------------------------------

class LlmUnavailableError(VatkgError):
    """The LLM endpoint could not be reached or kept failing."""


class EncoderUnavailableError(VatkgError):
    """The encoder endpoint could not be reached or kept failing."""


class UnscriptedPromptError(VatkgError):
    """A scripted mock LLM received a prompt matching none of its patterns."""


class UnreachableError(VatkgError):
    """An HTTP service could not be contacted after retries."""


class BadStatusError(VatkgError):
    """An HTTP service kept answering with a non-success status."""


class SchemaError(VatkgError):
    """An HTTP service answered with JSON that violates the wire contract."""


# --- rag errors --------------------------------------------------------------

class UnknownModalityError(VatkgError):
    """A retrieval request named a modality with no matching index."""


class UnknownTripletError(VatkgError):
    """A retrieval hit references a triplet id absent from the graph."""


class MissingDescriptionError(VatkgError):
    """Prompt assembly found a concept without a usable description."""
