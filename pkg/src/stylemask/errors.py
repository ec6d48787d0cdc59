"""Shared exception types."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition or invariant."""


class ScorerUnavailableError(RuntimeError):
    """The image-text scorer failed or cannot serve the request."""


class BackendUnavailableError(RuntimeError):
    """A generator/segmenter backend is missing weights or failed to load."""
