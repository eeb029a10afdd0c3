"""
Training and Sweep Configuration Models
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

from models.params import Features


class ObjectiveKind(str, Enum):
    BETA = "beta"
    TARGET_RATE = "target-rate"
    TARGET_DISTORTION = "target-distortion"


class QxMode(str, Enum):
    """Source of the data-marginal approximation q(x) used by G, U and S"""
    GENERATIVE = "generative"
    LEARNED = "learned"


@dataclass(frozen=True)
class Objective:
    """Training objective: beta (D + βR), target-rate (D + |σ − R|)
    or target-distortion (R + |δ − D|)"""
    kind: ObjectiveKind
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"{self.kind.value} parameter must be >= 0, got {self.value}")

    @property
    def tag(self) -> str:
        return f"{self.kind.value}:{self.value!r}"

    @classmethod
    def parse(cls, text: str) -> "Objective":
        """Parse 'beta:1.0', 'target-rate:0.5' or 'target-distortion:2.0'"""
        kind, sep, value = text.partition(":")
        if not sep:
            raise ValueError(f"objective must look like kind:value, got {text!r}")
        try:
            return cls(ObjectiveKind(kind.strip()), float(value))
        except ValueError as e:
            raise ValueError(f"bad objective {text!r}: {e}") from e

    @classmethod
    def beta(cls, value: float) -> "Objective":
        return cls(ObjectiveKind.BETA, float(value))

    @classmethod
    def target_rate(cls, value: float) -> "Objective":
        return cls(ObjectiveKind.TARGET_RATE, float(value))

    @classmethod
    def target_distortion(cls, value: float) -> "Objective":
        return cls(ObjectiveKind.TARGET_DISTORTION, float(value))


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear ramp of the rate-term weight from w_start to w_end"""
    w_start: float = 0.0
    w_end: float = 1.0
    start_step: int = 0
    end_step: int = 1000

    def to_dict(self) -> dict:
        return {
            "w_start": self.w_start,
            "w_end": self.w_end,
            "start_step": self.start_step,
            "end_step": self.end_step,
        }

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> Optional["AnnealSchedule"]:
        if not data:
            return None
        return cls(
            w_start=float(data["w_start"]),
            w_end=float(data["w_end"]),
            start_step=int(data["start_step"]),
            end_step=int(data["end_step"]),
        )


@dataclass(frozen=True)
class AdamSettings:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Full-batch training run configuration"""
    objective: Objective = field(default_factory=lambda: Objective.beta(1.0))
    steps: int = 20000
    learning_rate: float = 2e-3
    adam: AdamSettings = field(default_factory=AdamSettings)
    anneal: Optional[AnnealSchedule] = None
    seed: int = 0
    init_scale: float = 0.1
    log_every: int = 100
    latent_size: int = 30
    # None selects the objective's default map, see feature_map
    features: Optional[Features] = None
    qx_mode: QxMode = QxMode.GENERATIVE
    normalize_gradients: bool = False
    # Linear decay of the learning rate to zero from this step on; None keeps it constant
    lr_decay_start: Optional[int] = 0

    @property
    def feature_map(self) -> Features:
        """Explicit features, else one-hot tables for beta and bin-center bumps for targets.

        A one-hot decoder row can hold p* on its own, which the beta=1 collapse needs.
        Bin-center decoder rows are single bumps that line up with the generating
        clusters once a target pins the rate.
        """
        if self.features is not None:
            return self.features
        if self.objective.kind == ObjectiveKind.BETA:
            return Features.ONE_HOT
        return Features.BIN_CENTER

    def validate(self) -> "TrainConfig":
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.init_scale <= 0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale}")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")
        if self.latent_size < 2:
            raise ValueError(f"latent_size must be >= 2, got {self.latent_size}")
        if self.anneal is not None:
            a = self.anneal
            if not 0 <= a.start_step <= a.end_step <= self.steps:
                raise ValueError(
                    f"anneal range [{a.start_step}, {a.end_step}] outside [0, {self.steps}]"
                )
        if self.lr_decay_start is not None and not 0 <= self.lr_decay_start < self.steps:
            raise ValueError(f"lr_decay_start must lie in [0, {self.steps}), got {self.lr_decay_start}")
        return self

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization"""
        return {
            "objective": self.objective.tag,
            "steps": self.steps,
            "learning_rate": self.learning_rate,
            "adam": {
                "beta1": self.adam.beta1,
                "beta2": self.adam.beta2,
                "epsilon": self.adam.epsilon,
            },
            "anneal": self.anneal.to_dict() if self.anneal else None,
            "seed": self.seed,
            "init_scale": self.init_scale,
            "log_every": self.log_every,
            "latent_size": self.latent_size,
            "features": self.feature_map.value,
            "qx_mode": self.qx_mode.value,
            "normalize_gradients": self.normalize_gradients,
            "lr_decay_start": self.lr_decay_start,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        """Create TrainConfig from dictionary"""
        adam = data.get("adam", {})
        return cls(
            objective=Objective.parse(data["objective"]),
            steps=int(data.get("steps", 20000)),
            learning_rate=float(data.get("learning_rate", 2e-3)),
            adam=AdamSettings(
                beta1=float(adam.get("beta1", 0.9)),
                beta2=float(adam.get("beta2", 0.999)),
                epsilon=float(adam.get("epsilon", 1e-8)),
            ),
            anneal=AnnealSchedule.from_dict(data.get("anneal")),
            seed=int(data.get("seed", 0)),
            init_scale=float(data.get("init_scale", 0.1)),
            log_every=int(data.get("log_every", 100)),
            latent_size=int(data.get("latent_size", 30)),
            features=Features(data["features"]) if data.get("features") else None,
            qx_mode=QxMode(data.get("qx_mode", QxMode.GENERATIVE.value)),
            normalize_gradients=bool(data.get("normalize_gradients", False)),
            lr_decay_start=data.get("lr_decay_start", 0),
        )


@dataclass(frozen=True)
class SweepSpec:
    """Grid of objective parameters crossed with seeds"""
    kind: ObjectiveKind
    grid: Tuple[float, ...]
    seeds: int = 1
    base: TrainConfig = field(default_factory=TrainConfig)
    jobs: int = 1

    def validate(self) -> "SweepSpec":
        if not self.grid:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError(f"sweep grid must be strictly ascending, got {self.grid}")
        if self.seeds < 1:
            raise ValueError(f"seeds must be >= 1, got {self.seeds}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        self.base.validate()
        return self

    def cells(self) -> Tuple[Tuple[float, int], ...]:
        """(grid value, seed) pairs in canonical order"""
        return tuple(
            (value, self.base.seed + offset)
            for value in self.grid
            for offset in range(self.seeds)
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "grid": list(self.grid),
            "seeds": self.seeds,
            "base": self.base.to_dict(),
            "jobs": self.jobs,
        }
