"""Exception types shared across the workbench."""


class PetmError(Exception):
    """Base class for all workbench errors."""


class InsufficientData(PetmError):
    """Not enough usable records to satisfy a requested split."""


class EmptyText(PetmError):
    """An operation that needs visible characters received none."""


class ProviderUnavailable(PetmError):
    """A remote provider could not be reached or answered with an error.

    ``retry_after`` carries the provider's requested backoff in seconds
    when one was communicated, else None.
    """

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class RateLimited(ProviderUnavailable):
    """Provider pushed back with a rate limit."""


class ContextOverflow(PetmError):
    """Prompt exceeds the provider's configured input limit."""


class DimensionMismatch(PetmError):
    """Embedding provider returned vectors of inconsistent width."""


class EmptyIndex(PetmError):
    """Retrieval was asked to query an index with no entries."""


class LengthMismatch(PetmError):
    """Two aligned sequences do not have equal length."""


class MissingMarkings(PetmError):
    """A marked-error prompt was requested for a record without markings."""


class EmptyShots(PetmError):
    """Zero demonstration examples supplied without requesting zero-shot."""


class EmptyCorpus(PetmError):
    """Corpus-level metric received no segments."""


class EmptyReference(PetmError):
    """A reference segment tokenized to nothing."""


class EmptyVector(PetmError):
    """A marking vector with zero entries was passed where one is required."""


class DegenerateData(PetmError):
    """Reliability data admits no expected disagreement."""


class EmptyOutputSet(PetmError):
    """Scoring was requested over zero generated outputs."""


class NoBlocksAvailable(PetmError):
    """No unassigned annotation block is left for a new session."""


class SessionClosed(PetmError):
    """The referenced annotation session does not accept further actions."""


class ItemNotInSession(PetmError):
    """The item does not belong to the session, or was already answered."""


class NothingToReview(PetmError):
    """Review submitted for an item that has no generated correction."""
