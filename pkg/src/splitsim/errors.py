"""Exception types shared across the package."""


class SplitSimError(Exception):
    """Base class for all package errors."""


class ShapeMismatchError(SplitSimError):
    """Tensor shape incompatible with a layer or message contract."""


class TapeError(SplitSimError):
    """backward() called without a recorded forward pass."""


class FrameError(SplitSimError):
    """Malformed, corrupted or oversized wire frame."""


class ProtocolViolation(SplitSimError):
    """Message sequence or payload breaks the protocol state machine."""


class ConfigError(SplitSimError):
    """Invalid experiment configuration."""


class IngestionError(SplitSimError):
    """Dataset files missing, corrupt or failing checksum verification."""
