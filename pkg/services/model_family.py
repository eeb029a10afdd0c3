"""
Tabular encoder/decoder/marginal family and closed-form reference models.

    e(z_i | x_j) ∝ exp[-(w^e_i · x_j - b^e_i)^2]   softmax over latent symbols i
    d(x_j | z_i) ∝ exp[-(w^d_i · x_j - b^d_i)^2]   softmax over bins j
    m(z_i) = softmax(marg_logits)_i
"""
import logging
from typing import Tuple

import numpy as np
from scipy.special import softmax

from models.distributions import CondDist, FiniteDist
from models.params import Features, Model, ModelParams, Provenance
from models.toy_process import ToyProcess
from services import toygen

DEFAULT_LATENT_SIZE = 30

logger = logging.getLogger("ModelFamily")


def feature_matrix(features: Features, xvals: np.ndarray) -> np.ndarray:
    """bins x F matrix of inputs: bin centers (F = 1) or one-hot rows (F = bins)"""
    xvals = np.asarray(xvals, dtype=np.float64)
    if features == Features.ONE_HOT:
        return np.eye(xvals.shape[0])
    return xvals[:, None]


def _weights(w: np.ndarray) -> np.ndarray:
    return w.reshape(w.shape[0], -1)


def encoder_residuals(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """s[j, i] = w^e_i · x_j - b^e_i (bins x K)"""
    return X @ _weights(params.enc_w).T - params.enc_b


def decoder_residuals(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """t[i, j] = w^d_i · x_j - b^d_i (K x bins)"""
    return (X @ _weights(params.dec_w).T - params.dec_b).T


def realize(params: ModelParams, xvals: np.ndarray, provenance: Provenance = Provenance.TRAINED) -> Model:
    """Map parameters to the encoder, decoder and marginal distributions"""
    X = feature_matrix(params.features, xvals)
    with np.errstate(over="ignore"):
        enc_logits = -encoder_residuals(params, X) ** 2
        dec_logits = -decoder_residuals(params, X) ** 2
    return Model(
        encoder=CondDist(softmax(enc_logits, axis=1)),
        decoder=CondDist(softmax(dec_logits, axis=1)),
        marginal=FiniteDist(softmax(params.marg_logits)),
        provenance=provenance,
    )


def learned_qx(params: ModelParams) -> FiniteDist:
    """Free softmax data marginal carried by the parameters"""
    return FiniteDist(softmax(params.qx_logits))


def optimal_reference(tp: ToyProcess, latent_size: int = DEFAULT_LATENT_SIZE) -> Model:
    """Embed the true two-class posteriors into the first two latent symbols.

    Unused symbols get zero encoder and marginal mass and a uniform decoder row.
    """
    if latent_size < 2:
        raise ValueError(f"latent_size must be >= 2, got {latent_size}")
    z_given_x, x_given_z, _ = toygen.true_posteriors(tp)
    n = tp.bin_count

    encoder = np.zeros((n, latent_size))
    encoder[:, :2] = z_given_x.rows
    decoder = np.full((latent_size, n), 1.0 / n)
    decoder[:2, :] = x_given_z.rows
    marginal = np.zeros(latent_size)
    marginal[:2] = tp.class_prior.probs

    return Model(
        encoder=CondDist(encoder),
        decoder=CondDist(decoder),
        marginal=FiniteDist(marginal),
        provenance=Provenance.OPTIMAL_REFERENCE,
    )


def _spread_pair(rng: np.random.Generator, size: int, scale: float, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Bin-center weights and biases whose bumps sit at uniform points of the data range"""
    w = rng.uniform(-scale, scale, size=size)
    centers = rng.uniform(lo, hi, size=size)
    return w, w * centers


def init_params(
    seed: int,
    scale: float,
    xvals: np.ndarray,
    latent_size: int = DEFAULT_LATENT_SIZE,
    features: Features = Features.BIN_CENTER,
) -> ModelParams:
    """Reproducible random initialization; scale -> 0 gives uniform rows"""
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    rng = np.random.default_rng(seed)
    xvals = np.asarray(xvals, dtype=np.float64)

    if features == Features.ONE_HOT:
        shape = (latent_size, xvals.shape[0])
        enc_w = rng.uniform(-scale, scale, size=shape)
        enc_b = rng.uniform(-scale, scale, size=latent_size)
        # Decoder rows start identical, so only the encoder can make z informative
        dec_w = np.tile(rng.uniform(-scale, scale, size=shape[1]), (latent_size, 1))
        dec_b = np.full(latent_size, rng.uniform(-scale, scale))
    else:
        lo, hi = float(xvals.min()), float(xvals.max())
        enc_w, enc_b = _spread_pair(rng, latent_size, scale, lo, hi)
        dec_w, dec_b = _spread_pair(rng, latent_size, scale, lo, hi)

    return ModelParams(
        enc_w=enc_w,
        enc_b=enc_b,
        dec_w=dec_w,
        dec_b=dec_b,
        marg_logits=np.zeros(latent_size),
        features=features,
    )
