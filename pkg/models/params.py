"""
Model Parameter and Model Data Models
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np

from models.distributions import CondDist, FiniteDist
from models.errors import DimensionMismatch

MODELPARAMS_SCHEMA = "modelparams-v1"

BLOCKS = ("enc_w", "enc_b", "dec_w", "dec_b", "marg_logits")


class Features(str, Enum):
    """How a bin enters the encoder and decoder logits"""
    BIN_CENTER = "bin-center"
    ONE_HOT = "one-hot"


class Provenance(str, Enum):
    TRAINED = "trained"
    OPTIMAL_REFERENCE = "optimal-reference"
    EXPLICIT = "explicit"


def _array_dict(obj) -> Dict[str, np.ndarray]:
    blocks = {name: getattr(obj, name) for name in BLOCKS}
    if obj.qx_logits is not None:
        blocks["qx_logits"] = obj.qx_logits
    return blocks


@dataclass(eq=False)
class ModelParams:
    """Trainable parameters of the tabular encoder/decoder/marginal family.

    With bin-center features the weights are K-vectors; with one-hot features
    they are K x bins tables. qx_logits is present only when the data marginal
    approximation is learned.
    """
    enc_w: np.ndarray
    enc_b: np.ndarray
    dec_w: np.ndarray
    dec_b: np.ndarray
    marg_logits: np.ndarray
    features: Features = Features.BIN_CENTER
    qx_logits: Optional[np.ndarray] = None

    @property
    def latent_size(self) -> int:
        return self.enc_b.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        return _array_dict(self)

    def copy(self) -> "ModelParams":
        return ModelParams(
            features=self.features,
            **{name: np.array(value, copy=True) for name, value in self.arrays().items()},
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays().values())

    def flatten(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.arrays().values()])

    def with_flat(self, vector: np.ndarray) -> "ModelParams":
        """Same shapes and features, values taken from a flat vector"""
        blocks, offset = {}, 0
        for name, value in self.arrays().items():
            blocks[name] = np.array(vector[offset:offset + value.size], dtype=np.float64).reshape(value.shape)
            offset += value.size
        return ModelParams(features=self.features, **blocks)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization"""
        data = {name: value.tolist() for name, value in self.arrays().items()}
        data["features"] = self.features.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Create ModelParams from dictionary"""
        qx = data.get("qx_logits")
        return cls(
            enc_w=np.array(data["enc_w"], dtype=np.float64),
            enc_b=np.array(data["enc_b"], dtype=np.float64),
            dec_w=np.array(data["dec_w"], dtype=np.float64),
            dec_b=np.array(data["dec_b"], dtype=np.float64),
            marg_logits=np.array(data["marg_logits"], dtype=np.float64),
            features=Features(data.get("features", Features.BIN_CENTER.value)),
            qx_logits=None if qx is None else np.array(qx, dtype=np.float64),
        )


@dataclass(eq=False)
class GradVector:
    """Gradient of a loss, shaped like ModelParams"""
    enc_w: np.ndarray
    enc_b: np.ndarray
    dec_w: np.ndarray
    dec_b: np.ndarray
    marg_logits: np.ndarray
    qx_logits: Optional[np.ndarray] = None

    def arrays(self) -> Dict[str, np.ndarray]:
        return _array_dict(self)

    def flatten(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.arrays().values()])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flatten()))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flatten())))


@dataclass(frozen=True, eq=False)
class Model:
    """Encoder e(z|x) (bins x K), decoder d(x|z) (K x bins) and marginal m(z)"""
    encoder: CondDist
    decoder: CondDist
    marginal: FiniteDist
    provenance: Provenance = Provenance.EXPLICIT

    def __post_init__(self):
        k = self.marginal.size
        if self.encoder.n_out != k or self.decoder.n_in != k:
            raise DimensionMismatch(
                f"latent sizes disagree: encoder {self.encoder.n_out}, "
                f"decoder {self.decoder.n_in}, marginal {k}"
            )
        if self.encoder.n_in != self.decoder.n_out:
            raise DimensionMismatch(
                f"data sizes disagree: encoder {self.encoder.n_in}, decoder {self.decoder.n_out}"
            )

    @property
    def latent_size(self) -> int:
        return self.marginal.size

    @property
    def data_size(self) -> int:
        return self.encoder.n_in

    def permuted(self, perm) -> "Model":
        """Relabel latent symbol perm[i] as i"""
        perm = np.asarray(perm)
        return Model(
            encoder=CondDist(self.encoder.rows[:, perm]),
            decoder=CondDist(self.decoder.rows[perm, :]),
            marginal=FiniteDist(self.marginal.probs[perm]),
            provenance=self.provenance,
        )
