"""
Toy Process Construction and Noise Calibration

Builds the exact discrete joint p(x, z*) of a two-class Gaussian source
observed through equally spaced bins, and calibrates the shared noise level
to a target mutual information.
"""
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc

from models.distributions import Axis, CondDist, FiniteDist, JointDist
from models.errors import BracketFailure, InvalidGeometry
from models.toy_process import CalibrationReport, ToyProcess
from services import prob_core

DEFAULT_P1 = 0.3
DEFAULT_MU = (-1.0, 1.0)
DEFAULT_BIN_COUNT = 30
DEFAULT_TARGET_MI = 0.5
SIGMA_MAX_GUESS = 2.0
DEFAULT_BRACKET = (1e-3, 1e3)
CALIBRATION_TOLERANCE = 1e-6
CALIBRATION_MAX_ITER = 200

logger = logging.getLogger("Toygen")


def default_span(mu: Sequence[float] = DEFAULT_MU) -> Tuple[float, float]:
    """Bins cover three guessed-maximum standard deviations beyond both means"""
    return (min(mu) - 3.0 * SIGMA_MAX_GUESS, max(mu) + 3.0 * SIGMA_MAX_GUESS)


def _bin_masses(edges: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    """Gaussian mass per bin; the two outer bins absorb the tails.

    Bins left of the mean difference the lower-tail CDF and bins right of it
    difference the upper-tail survival function, so far-tail masses keep their
    relative precision.
    """
    t = (edges[1:-1] - mu) / (sigma * math.sqrt(2.0))
    cdf = np.concatenate(([0.0], 0.5 * erfc(-t), [1.0]))
    sf = np.concatenate(([1.0], 0.5 * erfc(t), [0.0]))

    centers = 0.5 * (edges[:-1] + edges[1:])
    return np.where(centers <= mu, np.diff(cdf), -np.diff(sf))


def build_toy_process(
    p1: float = DEFAULT_P1,
    mu: Sequence[float] = DEFAULT_MU,
    sigma: Union[float, Sequence[float]] = 1.0,
    bin_count: int = DEFAULT_BIN_COUNT,
    bin_span: Optional[Tuple[float, float]] = None,
) -> ToyProcess:
    """Exact joint over (bin, class) for the given geometry"""
    if not 0.0 < p1 < 1.0:
        raise ValueError(f"p1 must lie in (0, 1), got {p1}")
    sigmas = (float(sigma), float(sigma)) if np.isscalar(sigma) else tuple(float(s) for s in sigma)
    if len(sigmas) != 2 or min(sigmas) <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if len(mu) != 2:
        raise InvalidGeometry(f"expected two class means, got {len(mu)}")
    if bin_count < 2:
        raise InvalidGeometry(f"need at least 2 bins, got {bin_count}")

    lo, hi = bin_span if bin_span is not None else default_span(mu)
    if not lo < hi:
        raise InvalidGeometry(f"empty bin span ({lo}, {hi})")
    if not all(lo < m < hi for m in mu):
        raise InvalidGeometry(f"means {tuple(mu)} lie outside bin span ({lo}, {hi})")

    edges = np.linspace(lo, hi, bin_count + 1)
    table = np.column_stack([
        (1.0 - p1) * _bin_masses(edges, mu[0], sigmas[0]),
        p1 * _bin_masses(edges, mu[1], sigmas[1]),
    ])
    return ToyProcess(p1=p1, mu=tuple(mu), sigma=sigmas, bin_edges=edges, joint=JointDist(table))


def process_mi(tp: ToyProcess) -> float:
    """I(x; z*) of the process"""
    return prob_core.mutual_information(tp.joint)


def calibrate_noise(
    target_mi: float = DEFAULT_TARGET_MI,
    p1: float = DEFAULT_P1,
    mu: Sequence[float] = DEFAULT_MU,
    bin_count: int = DEFAULT_BIN_COUNT,
    bin_span: Optional[Tuple[float, float]] = None,
    tolerance: float = CALIBRATION_TOLERANCE,
    max_iter: int = CALIBRATION_MAX_ITER,
    bracket: Tuple[float, float] = DEFAULT_BRACKET,
) -> Tuple[CalibrationReport, ToyProcess]:
    """Bisect the shared sigma (in log space) until I(x; z*) hits target_mi.

    MI falls as sigma grows, so the low end of the bracket must exceed the
    target and the high end must fall below it.
    """
    span = bin_span if bin_span is not None else default_span(mu)

    def build(s: float) -> ToyProcess:
        return build_toy_process(p1=p1, mu=mu, sigma=s, bin_count=bin_count, bin_span=span)

    lo, hi = bracket
    mi_lo, mi_hi = process_mi(build(lo)), process_mi(build(hi))
    if not mi_hi < target_mi < mi_lo:
        raise BracketFailure(
            f"target {target_mi} nats not inside bracket MI range "
            f"[{mi_hi:.6g}, {mi_lo:.6g}] for sigma in [{lo:g}, {hi:g}]",
            low_mi=mi_hi,
            high_mi=mi_lo,
        )

    converged = False
    iterations = 0
    mid, achieved, tp = lo, mi_lo, None
    while iterations < max_iter:
        iterations += 1
        mid = math.sqrt(lo * hi)
        tp = build(mid)
        achieved = process_mi(tp)
        if abs(achieved - target_mi) <= tolerance:
            converged = True
            break
        if achieved > target_mi:
            lo = mid
        else:
            hi = mid

    if not converged:
        logger.warning(f"Calibration stopped after {iterations} iterations at |error| {abs(achieved - target_mi):.3g}")
    logger.info(f"Calibrated sigma={mid:.12g} -> I(x;z*)={achieved:.12g} nats in {iterations} iterations")

    report = CalibrationReport(
        target_mi=target_mi,
        achieved_mi=achieved,
        sigma=mid,
        iterations=iterations,
        bracket=(lo, hi),
        tolerance=tolerance,
        converged=converged,
    )
    return report, tp


def default_process() -> ToyProcess:
    """The calibrated 0.5-nat process with default geometry"""
    return calibrate_noise()[1]


def true_posteriors(tp: ToyProcess) -> Tuple[CondDist, CondDist, FiniteDist]:
    """(p(z*|x), p(x|z*), p(x)) by exact Bayes inversion of the joint"""
    return (
        prob_core.posterior(tp.joint, given=Axis.ROW),
        prob_core.posterior(tp.joint, given=Axis.COLUMN),
        prob_core.marginalize(tp.joint, Axis.ROW),
    )


def sample(tp: ToyProcess, n: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Draw n (bin, class) pairs; demonstration output only"""
    rng = np.random.default_rng(seed)
    flat = tp.joint.table.ravel()
    draws = rng.choice(flat.size, size=n, p=flat / flat.sum())
    return draws // 2, draws % 2
