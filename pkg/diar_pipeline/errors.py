"""Exception hierarchy for the diarization engine."""


class DiarizationError(Exception):
    """Root of every error raised on purpose by this package."""


class ConfigurationError(DiarizationError, ValueError):
    """Weights and configuration do not fit together."""


class ContractViolation(DiarizationError, ValueError):
    """An operation was called with inputs that break its preconditions."""


class BundleFormatError(DiarizationError):
    """A weight bundle is not a well-formed container."""


class ChecksumError(BundleFormatError):
    """Trailing CRC32 does not match the bundle contents."""


class IncompleteBundleError(BundleFormatError):
    """A tensor required by the configured architecture is missing."""

    def __init__(self, name: str):
        super().__init__(f"weight bundle is missing required tensor '{name}'")
        self.name = name


class RttmParseError(DiarizationError):
    """Malformed RTTM line."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class AudioFormatError(DiarizationError):
    """Audio file is not mono 16-bit PCM at the expected rate."""


class EmptyReferenceError(DiarizationError, ValueError):
    """DER is undefined without scored reference speech."""
