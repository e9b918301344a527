"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration: unknown identifiers, inconsistent shapes or versions."""


class ContractError(RuntimeError):
    """A call violated an operation's preconditions (e.g. training without masks)."""


class CorruptCheckpointError(ValueError):
    """A checkpoint file is truncated or malformed."""


class TrainingDivergedError(RuntimeError):
    """A non-finite loss was produced during training."""
