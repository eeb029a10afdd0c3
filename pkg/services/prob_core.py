"""
Exact information quantities over finite distributions.

Everything is in nats with the 0·ln 0 = 0 convention.
"""
import logging

import numpy as np
from scipy.special import entr, rel_entr

from models.distributions import Axis, CondDist, FiniteDist, JointDist
from models.errors import AbsoluteContinuityViolation, DimensionMismatch

logger = logging.getLogger("ProbCore")


def entropy(p: FiniteDist) -> float:
    """Shannon entropy of p"""
    return float(np.sum(entr(p.probs)))


def kl(p: FiniteDist, q: FiniteDist) -> float:
    """KL(p ‖ q); raises when p is not absolutely continuous w.r.t. q"""
    if p.size != q.size:
        raise DimensionMismatch(f"kl over alphabets of size {p.size} and {q.size}")
    violations = np.flatnonzero((q.probs == 0.0) & (p.probs > 0.0))
    if violations.size:
        raise AbsoluteContinuityViolation(
            f"p has mass on symbols {violations.tolist()} where q has none"
        )
    return max(float(np.sum(rel_entr(p.probs, q.probs))), 0.0)


def mutual_information(j: JointDist) -> float:
    """Exact I between the row and column variables of j"""
    table = j.table
    independent = np.outer(table.sum(axis=1), table.sum(axis=0))
    return max(float(np.sum(rel_entr(table, independent))), 0.0)


def compose_joint(px: FiniteDist, cond: CondDist) -> JointDist:
    """table[i][k] = px_i · cond[i][k]"""
    if cond.n_in != px.size:
        raise DimensionMismatch(
            f"conditional has {cond.n_in} rows but the marginal has {px.size} symbols"
        )
    return JointDist(px.probs[:, None] * cond.rows)


def marginalize(j: JointDist, axis: Axis) -> FiniteDist:
    """Distribution of the row (Axis.ROW) or column (Axis.COLUMN) variable"""
    if axis == Axis.ROW:
        return FiniteDist(j.table.sum(axis=1))
    return FiniteDist(j.table.sum(axis=0))


def posterior(j: JointDist, given: Axis) -> CondDist:
    """Conditional of the other variable given the `given` variable.

    Rows are indexed by the conditioning symbol. Slices with zero mass get a
    uniform row and are listed in CondDist.degenerate_rows.
    """
    slices = j.table if given == Axis.ROW else j.table.T
    mass = slices.sum(axis=1)
    empty = np.flatnonzero(mass <= 0.0)

    rows = np.empty_like(slices)
    full = mass > 0.0
    rows[full] = slices[full] / mass[full, None]
    rows[~full] = 1.0 / slices.shape[1]
    if empty.size:
        logger.debug(f"posterior given {given.value}: uniform rows for zero-mass slices {empty.tolist()}")
    return CondDist(rows, degenerate_rows=tuple(empty.tolist()))
