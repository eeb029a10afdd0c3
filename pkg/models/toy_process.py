"""
Toy Data-Generating Process Model
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from models.distributions import FiniteDist, JointDist

TOYPROCESS_SCHEMA = "toyprocess-v1"


@dataclass(frozen=True, eq=False)
class ToyProcess:
    """Bernoulli class, per-class Gaussian, discretized into equal bins.

    joint[x][z] is the exact probability of bin x together with class z.
    Class 0 carries 1 - p1 of the mass.
    """
    p1: float
    mu: Tuple[float, float]
    sigma: Tuple[float, float]
    bin_edges: np.ndarray
    joint: JointDist

    def __post_init__(self):
        edges = np.array(self.bin_edges, dtype=np.float64)
        edges.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))

    @property
    def bin_count(self) -> int:
        return self.bin_edges.shape[0] - 1

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def px(self) -> FiniteDist:
        """True data distribution p*(x)"""
        return FiniteDist(self.joint.table.sum(axis=1))

    @property
    def class_prior(self) -> FiniteDist:
        return FiniteDist(self.joint.table.sum(axis=0))

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization"""
        return {
            "schema": TOYPROCESS_SCHEMA,
            "p1": self.p1,
            "mu": list(self.mu),
            "sigma": list(self.sigma),
            "bin_edges": self.bin_edges.tolist(),
            "joint": self.joint.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ToyProcess":
        """Create ToyProcess from dictionary"""
        return cls(
            p1=float(data["p1"]),
            mu=tuple(data["mu"]),
            sigma=tuple(data["sigma"]),
            bin_edges=np.array(data["bin_edges"], dtype=np.float64),
            joint=JointDist(np.array(data["joint"], dtype=np.float64)),
        )


@dataclass(frozen=True)
class CalibrationReport:
    """Outcome of the noise-level bisection"""
    target_mi: float
    achieved_mi: float
    sigma: float
    iterations: int
    bracket: Tuple[float, float]
    tolerance: float
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "target_mi": self.target_mi,
            "achieved_mi": self.achieved_mi,
            "sigma": self.sigma,
            "iterations": self.iterations,
            "bracket": list(self.bracket),
            "tolerance": self.tolerance,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> Optional["CalibrationReport"]:
        if not data:
            return None
        return cls(
            target_mi=float(data["target_mi"]),
            achieved_mi=float(data["achieved_mi"]),
            sigma=float(data["sigma"]),
            iterations=int(data["iterations"]),
            bracket=tuple(data["bracket"]),
            tolerance=float(data["tolerance"]),
            converged=bool(data.get("converged", True)),
        )
