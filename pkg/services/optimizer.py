"""
Adaptive-moment optimizer over named parameter blocks.
"""
from typing import Dict, Optional

import numpy as np

from models.config import AdamSettings

NORM_FLOOR = 1e-12


class Adam:
    """Adam with optional global gradient normalization"""

    def __init__(self, lr: float, settings: AdamSettings = AdamSettings(), normalize: bool = False):
        self.lr = lr
        self.beta1 = settings.beta1
        self.beta2 = settings.beta2
        self.epsilon = settings.epsilon
        self.normalize = normalize
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], lr: Optional[float] = None) -> None:
        """Update params in place"""
        self.t += 1
        lr = self.lr if lr is None else lr

        scale = 1.0
        if self.normalize:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            scale = 1.0 / max(norm, NORM_FLOOR)

        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = lr / bc1

        for k, g in grads.items():
            g = g * scale
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])

            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)

            denom = np.sqrt(self.v[k] / bc2) + self.epsilon
            params[k] -= step_size * self.m[k] / denom
