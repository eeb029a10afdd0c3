"""
Diagnostics of a trained model against the true two-class process:
data-space and latent-space distributions, the x -> x' transfer channel,
and how well the latent symbols separate the generating classes.
"""
import logging
from typing import Optional

import numpy as np

from models.distributions import CondDist, FiniteDist
from models.errors import AbsoluteContinuityViolation, DimensionMismatch
from models.params import Model
from models.reports import ClusterReport, Fig2Report
from models.toy_process import ToyProcess
from services import objectives, prob_core

logger = logging.getLogger("Analysis")


def transfer_matrix(m: Model) -> CondDist:
    """p(x'|x) = Σ_z e(z|x) d(x'|z)"""
    return CondDist(m.encoder.rows @ m.decoder.rows)


def class_profiles(tp: ToyProcess, m: Model) -> np.ndarray:
    """e_z_class[c, z] = Σ_x p*(x, c) e(z|x); rows sum to the class prior"""
    if tp.bin_count != m.data_size:
        raise DimensionMismatch(f"process has {tp.bin_count} bins, model expects {m.data_size}")
    return tp.joint.table.T @ m.encoder.rows


def cluster_match(e_z_class: np.ndarray) -> ClusterReport:
    """Assign each latent symbol to the class holding most of its mass (ties go to class 0)"""
    profiles = np.asarray(e_z_class, dtype=np.float64)
    if profiles.ndim != 2 or profiles.shape[0] != 2:
        raise DimensionMismatch(f"expected two class profiles, got shape {profiles.shape}")

    assignment = np.where(profiles[1] > profiles[0], 1, 0)
    e_z = profiles.sum(axis=0)
    total = float(e_z.sum())
    if total <= 0.0:
        raise ValueError("class profiles carry no mass")

    mass = tuple(float(e_z[assignment == c].sum() / total) for c in (0, 1))
    purity = float(profiles[assignment, np.arange(profiles.shape[1])].sum() / total)
    return ClusterReport(
        assignment=tuple(int(a) for a in assignment),
        mass_per_class=mass,
        purity=purity,
    )


def fig2(tp: ToyProcess, m: Model, q_x: Optional[FiniteDist] = None) -> Fig2Report:
    """Every distribution needed to draw the data-space, latent-space and transfer panels"""
    px = tp.px
    profiles = class_profiles(tp, m)
    xfer = transfer_matrix(m)

    kl_p_q = None
    if q_x is not None:
        try:
            kl_p_q = prob_core.kl(px, q_x)
        except AbsoluteContinuityViolation:
            kl_p_q = float("inf")

    report = Fig2Report(
        g_x=objectives.generative_marginal(m),
        d_x=FiniteDist(px.probs @ xfer.rows),
        e_z=objectives.induced_marginal(px, m),
        m_z=m.marginal,
        e_z_class=profiles,
        xfer=xfer,
        kl_p_g=objectives.kl_to_generative(px, m),
        cluster=cluster_match(profiles),
        kl_p_q=kl_p_q,
    )
    logger.info(
        f"KL(p*||g) = {report.kl_p_g:.3g}, cluster masses "
        f"({report.cluster.mass_per_class[0]:.3f}, {report.cluster.mass_per_class[1]:.3f}), "
        f"purity {report.cluster.purity:.3f}"
    )
    return report


def recovers_process(report: Fig2Report, class_prior: FiniteDist, mass_tol: float = 0.05,
                     min_purity: float = 0.9, max_kl: float = 1e-2) -> bool:
    """Whether a model reproduces the two generating clusters.

    Latent symbols are matched to classes by majority mass, so each class's
    cluster mass is compared with that class's own prior.
    """
    masses = report.cluster.mass_per_class
    prior = class_prior.probs.tolist()
    return (
        report.cluster.purity > min_purity
        and report.kl_p_g < max_kl
        and all(abs(a - b) <= mass_tol for a, b in zip(masses, prior))
    )
