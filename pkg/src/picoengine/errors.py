"""Exception hierarchy shared across the engine."""


class PicoEngineError(Exception):
    """Base class for all engine errors."""


class DataError(PicoEngineError):
    """Bad corpus, instance, or embedding data."""


class SchemaError(DataError):
    """A serialized record violates its schema; message names line and field."""


class ModelError(PicoEngineError):
    """Model misuse: dimension mismatch, missing classes, diverged training."""


class MissingElement(DataError):
    """A query mask requires a PICO element the document has no spans for."""

    def __init__(self, element: str):
        super().__init__(f"document has no gold span for required element: {element}")
        self.element = element


class MissingEmbedding(DataError):
    """The dense backend has no vector for a document or query key."""

    def __init__(self, key: str, kind: str = "id"):
        super().__init__(f"no embedding for {kind}: {key!r}")
        self.key = key
        self.kind = kind
