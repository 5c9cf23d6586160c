from __future__ import annotations

import numpy as np

from .params import ParameterSet


class AdamMoments:
    def __init__(self, params: ParameterSet):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0


def adam_step(params: ParameterSet, grads: dict, moments: AdamMoments, lr=1e-3,
              beta1=0.9, beta2=0.999, eps=1e-8) -> None:
    """Bias-corrected Adam update, in place on ``params`` and ``moments``."""
    moments.t += 1
    t = moments.t
    for k in params.names():
        g = grads[k]
        moments.m[k] = beta1 * moments.m[k] + (1 - beta1) * g
        moments.v[k] = beta2 * moments.v[k] + (1 - beta2) * g * g
        m_hat = moments.m[k] / (1 - beta1**t)
        v_hat = moments.v[k] / (1 - beta2**t)
        params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + eps)


def global_norm(grads: dict) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: dict, max_norm: float) -> tuple[dict, float]:
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm
