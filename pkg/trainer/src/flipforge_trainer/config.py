from dataclasses import dataclass, field

AUGMENTATIONS = ("flip", "crop", "brightness")


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 4
    learning_rate: float = 1e-3
    sigma: float = 6.0
    augmentations: tuple[str, ...] = AUGMENTATIONS
    seed: int = 0
    deterministic: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        self.augmentations = tuple(self.augmentations)
        unknown = set(self.augmentations) - set(AUGMENTATIONS)
        if unknown:
            raise ValueError(f"unknown augmentations {sorted(unknown)}")
