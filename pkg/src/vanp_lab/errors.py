"""Exception types shared across the package."""


class VanpLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(VanpLabError):
    """Invalid or unknown configuration key/value."""


class ShapeError(VanpLabError):
    """Tensor shape does not match the declared contract."""

    def __init__(self, expected, actual, what="input"):
        super().__init__(f"{what}: expected shape {tuple(expected)}, got {tuple(actual)}")
        self.expected = tuple(expected)
        self.actual = tuple(actual)


class DatasetIntegrityError(VanpLabError):
    """Stored record failed its checksum or structural validation."""

    def __init__(self, record_id, detail):
        super().__init__(f"record '{record_id}': {detail}")
        self.record_id = record_id


class CheckpointError(VanpLabError):
    """Checkpoint file is unreadable or incompatible."""


class TrainingDiverged(VanpLabError):
    """Loss became non-finite during training."""

    def __init__(self, step, last_breakdown):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step
        self.last_breakdown = last_breakdown
