"""
Analytic gradients of the training objectives with respect to ModelParams.

The computation graph is fixed: two softmax layers over quadratic logits,
a softmax marginal, and the bilinear rate/distortion sums. The backward
pass below is derived by hand for that graph.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from models.config import Objective, QxMode
from models.distributions import FiniteDist
from models.errors import NonFiniteLoss
from models.params import GradVector, ModelParams
from services import objectives
from services.model_family import decoder_residuals, encoder_residuals, feature_matrix

FD_STEP = 1e-5
FD_ABS_FLOOR = 1e-8

logger = logging.getLogger("GradEngine")


@dataclass(frozen=True)
class GradResult:
    loss: float
    grad: GradVector
    D: float
    R: float


@dataclass(frozen=True)
class _Forward:
    X: np.ndarray
    s: np.ndarray
    t: np.ndarray
    log_enc: np.ndarray
    enc: np.ndarray
    log_dec: np.ndarray
    dec: np.ndarray
    log_marg: np.ndarray
    marg: np.ndarray
    J: np.ndarray
    q: np.ndarray
    D: float
    R: float


def _forward(params: ModelParams, p: np.ndarray, xvals: np.ndarray) -> _Forward:
    X = feature_matrix(params.features, xvals)
    with np.errstate(over="ignore", invalid="ignore"):
        s = encoder_residuals(params, X)
        t = decoder_residuals(params, X)
        log_enc = log_softmax(-s * s, axis=1)
        log_dec = log_softmax(-t * t, axis=1)
        log_marg = log_softmax(params.marg_logits)
        enc = np.exp(log_enc)
        dec = np.exp(log_dec)
        J = p[:, None] * enc
        D = float(-np.sum(J * log_dec.T))
        R = float(np.sum(J * (log_enc - log_marg[None, :])))
    return _Forward(
        X=X, s=s, t=t,
        log_enc=log_enc, enc=enc,
        log_dec=log_dec, dec=dec,
        log_marg=log_marg, marg=np.exp(log_marg),
        J=J, q=J.sum(axis=0),
        D=D, R=max(R, 0.0),
    )


def evaluate(
    objective: Objective,
    params: ModelParams,
    px: FiniteDist,
    xvals: np.ndarray,
    qx_mode: QxMode = QxMode.GENERATIVE,
    weight: float = 1.0,
) -> GradResult:
    """Loss, gradient, distortion and rate at params"""
    p = px.probs
    fw = _forward(params, p, xvals)
    loss = objectives.objective_loss(objective, fw.D, fw.R, weight)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"{objective.tag} loss is {loss} (D={fw.D}, R={fw.R})")
    c_d, c_r = objectives.objective_coefficients(objective, fw.D, fw.R, weight)

    # encoder: dL/de(z|x), then back through the row softmax and the square
    g_enc = p[:, None] * (c_r * (fw.log_enc - fw.log_marg[None, :]) - c_d * fw.log_dec.T)
    d_logits = fw.enc * (g_enc - np.sum(fw.enc * g_enc, axis=1, keepdims=True))
    d_s = -2.0 * fw.s * d_logits
    d_enc_w = (d_s.T @ fw.X).reshape(params.enc_w.shape)
    d_enc_b = -d_s.sum(axis=0)

    # decoder: dD/dlogits[i, k] = d(x_k|z_i) q_i - J[k, i]
    d_dec_logits = c_d * (fw.dec * fw.q[:, None] - fw.J.T)
    d_t = -2.0 * fw.t * d_dec_logits
    d_dec_w = (d_t @ fw.X).reshape(params.dec_w.shape)
    d_dec_b = -d_t.sum(axis=1)

    # marginal: dR/dlogits = m Σq - q, zero at the induced marginal
    d_marg = c_r * (fw.marg * fw.q.sum() - fw.q)

    d_qx = None
    if qx_mode == QxMode.LEARNED and params.qx_logits is not None:
        d_qx = softmax(params.qx_logits) * p.sum() - p

    grad = GradVector(
        enc_w=d_enc_w,
        enc_b=d_enc_b,
        dec_w=d_dec_w,
        dec_b=d_dec_b,
        marg_logits=d_marg,
        qx_logits=d_qx,
    )
    return GradResult(loss=loss, grad=grad, D=fw.D, R=fw.R)


def gradient(
    objective: Objective,
    params: ModelParams,
    px: FiniteDist,
    xvals: np.ndarray,
    qx_mode: QxMode = QxMode.GENERATIVE,
    weight: float = 1.0,
):
    """(loss, GradVector) of the objective at params.

    With a learned q_x the qx_logits block is the gradient of
    S = KL(p* ‖ q_x), which is decoupled from the objective.
    """
    result = evaluate(objective, params, px, xvals, qx_mode, weight)
    return result.loss, result.grad


def loss_value(objective: Objective, params: ModelParams, px: FiniteDist, xvals: np.ndarray, weight: float = 1.0) -> float:
    fw = _forward(params, px.probs, xvals)
    return objectives.objective_loss(objective, fw.D, fw.R, weight)


def s_value(params: ModelParams, px: FiniteDist) -> float:
    """Cross-entropy part of S for the learned q_x (S up to the constant H)"""
    return float(-np.dot(px.probs, log_softmax(params.qx_logits)))


def fd_check(
    params: ModelParams,
    objective: Objective,
    px: FiniteDist,
    xvals: np.ndarray,
    h: float = FD_STEP,
    qx_mode: QxMode = QxMode.GENERATIVE,
    abs_floor: float = FD_ABS_FLOOR,
) -> float:
    """Worst relative deviation between gradient() and central differences.

    Coordinates whose absolute deviation is within abs_floor count as exact.
    """
    if h <= 0:
        raise ValueError(f"step must be > 0, got {h}")
    _, grad = gradient(objective, params, px, xvals, qx_mode)
    analytic = grad.flatten()
    theta = params.flatten()
    n_main = theta.size - (params.qx_logits.size if grad.qx_logits is not None else 0)

    worst = 0.0
    for i in range(analytic.size):
        plus, minus = theta.copy(), theta.copy()
        plus[i] += h
        minus[i] -= h
        if i < n_main:
            f_plus = loss_value(objective, params.with_flat(plus), px, xvals)
            f_minus = loss_value(objective, params.with_flat(minus), px, xvals)
        else:
            f_plus = s_value(params.with_flat(plus), px)
            f_minus = s_value(params.with_flat(minus), px)
        numeric = (f_plus - f_minus) / (2.0 * h)
        deviation = abs(numeric - analytic[i])
        if deviation <= abs_floor:
            continue
        worst = max(worst, deviation / max(abs(numeric), abs(analytic[i])))

    logger.debug(f"fd_check {objective.tag} h={h:g}: max relative error {worst:.3g}")
    return worst
