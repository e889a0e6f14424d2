"""Shared exception types. All domain failures derive from DataError so the
CLI can map them to a single exit code."""


class DataError(Exception):
    """Input data or files violate a documented contract."""


class SceneLoadError(DataError):
    """A scene directory could not be loaded; message names the offending file."""


class SceneSpecError(DataError):
    """A synthetic scene spec violates its own invariants."""


class MissingAnnotationError(DataError):
    """A manifest annotation required by an operation is absent."""


class SpliceBoundsError(DataError):
    """A splice span does not fit inside the scene."""


class InsufficientHistoryError(DataError):
    """A sample index does not have enough past frames."""


class HashMismatchError(DataError):
    """Dataset file content does not match its recorded hash."""


class EmptyEvaluationError(DataError):
    """Confusion counts contain no counted pixels."""
