"""
Result Data Models

Evaluated bounds, trained points, frontiers, training traces and the
diagnostic distributions of a model.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from models.config import Objective, TrainConfig
from models.distributions import CondDist, FiniteDist
from models.params import ModelParams

FIG2_SCHEMA = "fig2-v1"


class Feasibility(str, Enum):
    """Where a point sits in the rate-distortion plane"""
    INTERIOR = "feasible-interior"
    AUTO_ENCODING_EDGE = "auto-encoding-edge"
    AUTO_DECODING_EDGE = "auto-decoding-edge"
    DIAGONAL = "diagonal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class BoundsReport:
    """Every information functional of one model, in nats"""
    H: float
    D: float
    R: float
    I_rep: float
    E: float
    G: float
    I_gen: float
    U: float
    S: float
    elbo: float

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "D": self.D,
            "R": self.R,
            "elbo": self.elbo,
            "I_rep": self.I_rep,
            "E": self.E,
            "G": self.G,
            "I_gen": self.I_gen,
            "U": self.U,
            "S": self.S,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundsReport":
        return cls(**{name: float(data[name]) for name in (
            "H", "D", "R", "I_rep", "E", "G", "I_gen", "U", "S", "elbo")})

    @classmethod
    def missing(cls) -> "BoundsReport":
        """Placeholder for a run that produced no model"""
        nan = math.nan
        return cls(H=nan, D=nan, R=nan, I_rep=nan, E=nan, G=nan, I_gen=nan, U=nan, S=nan, elbo=nan)


@dataclass(frozen=True)
class RDPoint:
    """One evaluated model in the rate-distortion plane"""
    objective: Objective
    seed: int
    report: BoundsReport
    feasibility: Optional[Feasibility] = None
    converged: bool = True
    error: str = ""

    @property
    def R(self) -> float:
        return self.report.R

    @property
    def D(self) -> float:
        return self.report.D

    @property
    def elbo(self) -> float:
        return self.report.elbo

    @property
    def grid_value(self) -> float:
        return self.objective.value

    def is_finite(self) -> bool:
        return self.converged and math.isfinite(self.R) and math.isfinite(self.D)


@dataclass(frozen=True)
class Frontier:
    """Stepwise Pareto set and lower convex hull of a set of points.

    pareto and hull are sorted by ascending rate.
    """
    points: Tuple[RDPoint, ...]
    pareto: Tuple[RDPoint, ...]
    hull: Tuple[RDPoint, ...]

    def hull_value(self, rate: float) -> float:
        """Piecewise-linear lower boundary at the given rate; flat past the last vertex"""
        rs = np.array([p.R for p in self.hull])
        ds = np.array([p.D for p in self.hull])
        if rate <= rs[0]:
            return float(ds[0])
        return float(np.interp(rate, rs, ds))


@dataclass(frozen=True)
class DiagonalLine:
    """The D = H − R segment from (0, H) to (H, 0)"""
    H: float

    @property
    def endpoints(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (0.0, self.H), (self.H, 0.0)

    def gap(self, rate: float, distortion: float) -> float:
        """Signed distance above the line along D (negative is infeasible)"""
        return rate + distortion - self.H


@dataclass(frozen=True)
class ClusterReport:
    """Latent symbols assigned to true classes by majority mass"""
    assignment: Tuple[int, ...]
    mass_per_class: Tuple[float, float]
    purity: float

    def to_dict(self) -> dict:
        return {
            "assignment": list(self.assignment),
            "mass_per_class": list(self.mass_per_class),
            "purity": self.purity,
        }


@dataclass(frozen=True, eq=False)
class Fig2Report:
    """Data-space, latent-space and transfer distributions of one model"""
    g_x: FiniteDist
    d_x: FiniteDist
    e_z: FiniteDist
    m_z: FiniteDist
    e_z_class: np.ndarray
    xfer: CondDist
    kl_p_g: float
    cluster: ClusterReport
    kl_p_q: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "schema": FIG2_SCHEMA,
            "g_x": self.g_x.to_list(),
            "d_x": self.d_x.to_list(),
            "e_z": self.e_z.to_list(),
            "m_z": self.m_z.to_list(),
            "e_z_class": np.asarray(self.e_z_class).tolist(),
            "kl_p_g": self.kl_p_g,
            "cluster": self.cluster.to_dict(),
            "kl_p_q": self.kl_p_q,
        }


@dataclass(frozen=True)
class TraceRecord:
    step: int
    loss: float
    R: float
    D: float
    elbo: float
    anneal_w: float


@dataclass
class TrainTrace:
    """Logged progress and final state of one training run"""
    config: TrainConfig
    records: List[TraceRecord] = field(default_factory=list)
    final_params: Optional[ModelParams] = None
    final_report: Optional[BoundsReport] = None
    wall_time: float = 0.0
