"""
Finite Distribution Models

Exact probability vectors, row-stochastic matrices and joint tables.
All values are validated once at construction and are read-only afterwards.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from models.errors import InvalidDistribution

SUM_TOLERANCE = 1e-12
RENORMALIZE_TOLERANCE = 1e-9


class Axis(str, Enum):
    """Which variable of a joint table an operation refers to"""
    ROW = "row"
    COLUMN = "column"


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def normalize_masses(values, name: str, axis=None) -> np.ndarray:
    """Validate non-negative masses and renormalize round-off drift.

    Sums off by more than SUM_TOLERANCE but within RENORMALIZE_TOLERANCE are
    divided through; smaller drift is left alone so that rebuilding a
    distribution from its own masses is exact. Anything further is rejected.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.size == 0:
        raise InvalidDistribution(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{name} has non-finite entries")
    if np.any(arr < 0):
        raise InvalidDistribution(f"{name} has negative entries (min {arr.min():.3g})")

    totals = arr.sum(axis=axis, keepdims=axis is not None)
    drift = np.max(np.abs(totals - 1.0))
    if drift > RENORMALIZE_TOLERANCE:
        raise InvalidDistribution(f"{name} sums to 1 only within {drift:.3g}")
    if drift > SUM_TOLERANCE:
        arr = arr / totals
    return arr


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability vector over a finite alphabet"""
    probs: np.ndarray

    def __post_init__(self):
        probs = normalize_masses(self.probs, "FiniteDist")
        if probs.ndim != 1:
            raise InvalidDistribution(f"FiniteDist must be 1-d, got shape {probs.shape}")
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "FiniteDist":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, index: int) -> "FiniteDist":
        probs = np.zeros(n)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def binary(cls, p0: float) -> "FiniteDist":
        """Two-symbol distribution with mass p0 on symbol 0 (Ber(0.7) convention)"""
        return cls(np.array([p0, 1.0 - p0]))

    def to_list(self) -> list:
        return self.probs.tolist()


@dataclass(frozen=True, eq=False)
class CondDist:
    """Row-stochastic matrix; rows[i] is the output distribution given input i.

    degenerate_rows lists inputs whose row was filled in uniformly because the
    conditioning slice had no mass.
    """
    rows: np.ndarray
    degenerate_rows: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise InvalidDistribution(f"CondDist must be 2-d, got shape {rows.shape}")
        rows = normalize_masses(rows, "CondDist row", axis=1)
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "degenerate_rows", tuple(int(i) for i in self.degenerate_rows))

    @property
    def n_in(self) -> int:
        return self.rows.shape[0]

    @property
    def n_out(self) -> int:
        return self.rows.shape[1]

    def row(self, i: int) -> FiniteDist:
        return FiniteDist(self.rows[i])

    @classmethod
    def identity(cls, n: int) -> "CondDist":
        return cls(np.eye(n))

    @classmethod
    def constant(cls, n_in: int, dist: FiniteDist) -> "CondDist":
        """Every row equal to dist"""
        return cls(np.tile(dist.probs, (n_in, 1)))

    def to_list(self) -> list:
        return self.rows.tolist()


@dataclass(frozen=True, eq=False)
class JointDist:
    """Joint probability table over (row symbol, column symbol) pairs"""
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=np.float64)
        if table.ndim != 2:
            raise InvalidDistribution(f"JointDist must be 2-d, got shape {table.shape}")
        table = normalize_masses(table, "JointDist")
        object.__setattr__(self, "table", _frozen(table))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.table.shape

    def to_list(self) -> list:
        return self.table.tolist()
