class TrainerError(Exception):
    """Base class for trainer-specific failures."""


class DatasetFormatError(TrainerError):
    """Dataset tree is malformed or carries an unsupported format version."""


class DimensionMismatchError(TrainerError):
    """Inference input dimensions disagree with the checkpoint."""
