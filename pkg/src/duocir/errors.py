"""Error taxonomy for the retrieval pipeline.

Every failure mode callers are expected to branch on gets its own class;
everything inherits from PipelineError so scripts can catch broadly.
"""


class PipelineError(Exception):
    """Base class for all pipeline errors."""


# --- vector math ---

class ZeroVector(PipelineError):
    """An all-zero vector reached an operation that needs a direction."""


class DimensionMismatch(PipelineError):
    """Vectors of different dimensions were combined."""


class InvalidWeights(PipelineError):
    """Fusion weights violate 0 <= alpha, beta and alpha + beta <= 1."""


# --- retrieval ---

class EmptyGallery(PipelineError):
    """Retrieval was attempted over a gallery with no entries."""


class UnknownCandidate(PipelineError):
    """A candidate identifier is not present in the gallery."""


class UnknownReference(PipelineError):
    """Reference exclusion was requested but no reference id was supplied."""


# --- caption generation ---

class UnknownTemplate(PipelineError):
    """No prompt template is registered under the requested id."""


class ProviderUnavailable(PipelineError):
    """The caption provider kept failing after all retry attempts."""


class ProviderTransientError(PipelineError):
    """A retryable provider failure (timeout, rate limit, 5xx)."""


class ImageUnresolvable(PipelineError):
    """The reference image could not be located or read."""


class ParseFailure(PipelineError):
    """The provider response did not yield the two labeled captions.

    `category` is one of: no-object-found, missing-key, empty-caption.
    """

    def __init__(self, category: str, message: str = ""):
        self.category = category
        super().__init__(f"{category}: {message}" if message else category)


# --- dataset and store I/O ---

class MalformedAnnotation(PipelineError):
    """An annotation entry violates the dataset schema."""


class MissingField(PipelineError):
    """An annotation entry lacks a required field."""


class BadMagic(PipelineError):
    """Embedding-store file does not start with the expected magic bytes."""


class UnsupportedVersion(PipelineError):
    """Embedding-store file declares a version this reader cannot parse."""


class TruncatedFile(PipelineError):
    """Embedding-store file length disagrees with what its header promises."""


class DuplicateId(PipelineError):
    """The same identifier appears more than once in an embedding store."""


# --- evaluation ---

class QueryMismatch(PipelineError):
    """Ranked results and eval records do not align one-to-one by query id."""


class MissingSubset(PipelineError):
    """Subset recall was requested for a record without subset ids."""


class DanglingId(PipelineError):
    """Identifiers referenced by eval records are absent from the gallery."""

    def __init__(self, ids, message: str = "unresolved identifiers"):
        self.ids = sorted(ids)
        super().__init__(f"{message}: {self.ids}")


class MissingCaptionEmbedding(PipelineError):
    """A query has no caption embedding under query_id#modi / query_id#integ."""


class UnsupportedFormat(PipelineError):
    """Unknown report output format."""
