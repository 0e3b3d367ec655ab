"""Exception hierarchy shared across the toolkit."""


class RelsceneError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(RelsceneError):
    """Corpus config missing, malformed or violating an invariant."""


class PlacementError(RelsceneError):
    """Scene planning could not satisfy the relation constraints."""


class SchemaError(RelsceneError):
    """Interchange file violates the documented schema."""


class AudioFormatError(RelsceneError):
    """Waveform has the wrong sample rate, length or channel count."""
