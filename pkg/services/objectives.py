"""
Information functionals and training objectives.

Rate and distortion bound the representational mutual information,
E and G bound the generative one, and U - S rewrites H - D through a data
marginal approximation q(x). Support failures surface as infinities.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import rel_entr, xlogy

from models.config import Objective, ObjectiveKind
from models.distributions import FiniteDist
from models.errors import AbsoluteContinuityViolation, DimensionMismatch
from models.params import Model
from models.reports import BoundsReport, Feasibility
from services import prob_core

EDGE_TOLERANCE = 1e-6
AUDIT_TOLERANCE = 1e-9
KINK_TOLERANCE = 1e-12


def _check_data(px: FiniteDist, m: Model):
    if px.size != m.data_size:
        raise DimensionMismatch(f"data alphabet {px.size} but model expects {m.data_size}")


def _representational_joint(px: FiniteDist, m: Model) -> np.ndarray:
    """J[x, z] = p*(x) e(z|x)"""
    return px.probs[:, None] * m.encoder.rows


def distortion(px: FiniteDist, m: Model) -> float:
    """D = -Σ_x p*(x) Σ_z e(z|x) ln d(x|z)"""
    _check_data(px, m)
    J = _representational_joint(px, m)
    with np.errstate(divide="ignore"):
        return float(-np.sum(xlogy(J, m.decoder.rows.T)))


def rate(px: FiniteDist, m: Model) -> float:
    """R = Σ_x p*(x) KL(e(·|x) ‖ m)"""
    _check_data(px, m)
    support = px.probs > 0.0
    per_row = np.sum(rel_entr(m.encoder.rows[support], m.marginal.probs[None, :]), axis=1)
    return max(float(np.dot(px.probs[support], per_row)), 0.0)


def representational_mi(px: FiniteDist, m: Model) -> float:
    return prob_core.mutual_information(prob_core.compose_joint(px, m.encoder))


def generative_marginal(m: Model) -> FiniteDist:
    """g(x) = Σ_z m(z) d(x|z)"""
    return FiniteDist(m.marginal.probs @ m.decoder.rows)


def induced_marginal(px: FiniteDist, m: Model) -> FiniteDist:
    """e(z) = Σ_x p*(x) e(z|x), the optimal variational marginal"""
    return FiniteDist(px.probs @ m.encoder.rows)


def elbo(D: float, R: float) -> float:
    return -(D + R)


def beta_loss(D: float, R: float, beta: float) -> float:
    """D + βR"""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return D + beta * R


def target_rate_loss(D: float, R: float, sigma: float) -> float:
    """D + |σ - R|"""
    if sigma < 0:
        raise ValueError(f"target rate must be >= 0, got {sigma}")
    return D + abs(sigma - R)


def target_distortion_loss(D: float, R: float, delta: float) -> float:
    """R + |δ - D|"""
    if delta < 0:
        raise ValueError(f"target distortion must be >= 0, got {delta}")
    return R + abs(delta - D)


def _kink_sign(value: float) -> float:
    if abs(value) < KINK_TOLERANCE:
        return 0.0
    return math.copysign(1.0, value)


def objective_loss(objective: Objective, D: float, R: float, weight: float = 1.0) -> float:
    """Loss with the rate-side term scaled by an annealing weight"""
    if objective.kind == ObjectiveKind.BETA:
        return beta_loss(D, R, objective.value * weight)
    if objective.kind == ObjectiveKind.TARGET_RATE:
        return D + weight * abs(objective.value - R)
    return weight * R + abs(objective.value - D)


def objective_coefficients(objective: Objective, D: float, R: float, weight: float = 1.0) -> Tuple[float, float]:
    """(∂loss/∂D, ∂loss/∂R); the absolute-value kink contributes zero"""
    if objective.kind == ObjectiveKind.BETA:
        return 1.0, objective.value * weight
    if objective.kind == ObjectiveKind.TARGET_RATE:
        return 1.0, weight * _kink_sign(R - objective.value)
    return _kink_sign(D - objective.value), weight


def generative_bounds(m: Model, q_x: FiniteDist) -> Tuple[float, float, float]:
    """(E, I_gen, G) for the path m(z) d(x|z); E uses the encoder as the
    approximate posterior and G uses q_x as the approximate data marginal"""
    if q_x.size != m.data_size:
        raise DimensionMismatch(f"q_x has {q_x.size} symbols, model expects {m.data_size}")
    pgen = m.marginal.probs[:, None] * m.decoder.rows
    log_m = xlogy(pgen, m.marginal.probs[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        E = float(np.sum(xlogy(pgen, m.encoder.rows.T)) - np.sum(log_m))
        G = float(np.sum(xlogy(pgen, m.decoder.rows)) - np.sum(xlogy(pgen, q_x.probs[None, :])))
    I_gen = prob_core.mutual_information(prob_core.compose_joint(m.marginal, m.decoder))
    return E, I_gen, G


def reparam_bounds(px: FiniteDist, m: Model, q_x: FiniteDist) -> Tuple[float, float]:
    """(U, S) with U - S = H - D"""
    _check_data(px, m)
    J = _representational_joint(px, m)
    with np.errstate(divide="ignore"):
        cross = float(-np.sum(xlogy(px.probs, q_x.probs)))
        U = float(np.sum(xlogy(J, m.decoder.rows.T))) + cross
    S = cross - prob_core.entropy(px)
    return U, S


def s_target_estimate(H: float, n: int) -> float:
    """Finite-sample estimate H - ln N of KL(empirical ‖ true); diagnostic only"""
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")
    return H - math.log(n)


def bounds_report(px: FiniteDist, m: Model, q_x: Optional[FiniteDist] = None) -> BoundsReport:
    """All functionals of m under p*(x); q_x defaults to the exact generative marginal"""
    q_x = q_x if q_x is not None else generative_marginal(m)
    H = prob_core.entropy(px)
    D = distortion(px, m)
    R = rate(px, m)
    E, I_gen, G = generative_bounds(m, q_x)
    U, S = reparam_bounds(px, m, q_x)
    return BoundsReport(
        H=H,
        D=D,
        R=R,
        I_rep=representational_mi(px, m),
        E=E,
        G=G,
        I_gen=I_gen,
        U=U,
        S=S,
        elbo=elbo(D, R),
    )


def feasibility(point: BoundsReport, tol: float = EDGE_TOLERANCE) -> Feasibility:
    """Classify a point against R >= 0, D >= 0 and R + D >= H"""
    R, D, H = point.R, point.D, point.H
    if R < -tol or D < -tol or R + D < H - tol:
        return Feasibility.INFEASIBLE
    if abs(R) <= tol:
        return Feasibility.AUTO_DECODING_EDGE
    if abs(D) <= tol:
        return Feasibility.AUTO_ENCODING_EDGE
    if abs(R + D - H) <= tol:
        return Feasibility.DIAGONAL
    return Feasibility.INTERIOR


def _le(a: float, b: float, tol: float) -> bool:
    """a <= b + tol, treating equal infinities as satisfied"""
    if a == b:
        return True
    return a - b <= tol


def audit(report: BoundsReport, tol: float = AUDIT_TOLERANCE) -> List[str]:
    """Statements of every violated invariant; empty when all hold"""
    r = report
    violations = []
    if not _le(r.H - r.D, r.I_rep, tol):
        violations.append(f"H - D = {r.H - r.D!r} exceeds I_rep = {r.I_rep!r}")
    if not _le(r.I_rep, r.R, tol):
        violations.append(f"I_rep = {r.I_rep!r} exceeds R = {r.R!r}")
    if not _le(r.E, r.I_gen, tol):
        violations.append(f"E = {r.E!r} exceeds I_gen = {r.I_gen!r}")
    if not _le(r.I_gen, r.G, tol):
        violations.append(f"I_gen = {r.I_gen!r} exceeds G = {r.G!r}")
    if math.isfinite(r.U) and math.isfinite(r.S) and abs((r.U - r.S) - (r.H - r.D)) > tol:
        violations.append(f"U - S = {r.U - r.S!r} differs from H - D = {r.H - r.D!r}")
    if r.D < -tol or r.R < -tol:
        violations.append(f"negative rate or distortion (R = {r.R!r}, D = {r.D!r})")
    if r.elbo != -(r.D + r.R):
        violations.append(f"elbo = {r.elbo!r} is not -(D + R)")
    return violations


def kl_to_generative(px: FiniteDist, m: Model) -> float:
    """KL(p* ‖ g); +inf when g misses part of the data support"""
    try:
        return prob_core.kl(px, generative_marginal(m))
    except AbsoluteContinuityViolation:
        return math.inf
