"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ShapeError(ValueError):
    """Array dimensions do not match what the operation requires."""


class ConfigError(ValueError):
    """A configuration value is invalid or inconsistent."""


class StateError(RuntimeError):
    """The object is not in a state that permits the requested operation."""


class ProtocolError(RuntimeError):
    """A remote peer violated the wire protocol."""


class TrainingDiverged(RuntimeError):
    """A loss became non-finite during training."""
