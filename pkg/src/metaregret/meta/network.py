"""Recurrent meta network shared by every infostate of both players.

Per infostate the network sees a static encoding ``e_s`` and the dynamic
regret pair ``(r, R)``.  The static path is one fully connected layer.  A
first LSTM runs per infostate, its outputs are max-pooled over all
infostates of the game and concatenated back, and a second LSTM plus a
linear layer produce one logit per action.  The head is a masked softmax
(strategy output) or a scaled sigmoid (regret prediction offset).
"""

from __future__ import annotations

import numpy as np

from .. import rng as rng_mod
from ..autodiff import tensor as ad
from ..autodiff.layers import lstm_cell
from ..autodiff.params import ParameterSet

ARCH_VERSION = 1
HEADS = ("noa", "npcfr")


def architecture(head, feature_dim, num_actions, hidden=64, static=16, layer_norm=False,
                 alpha=1.0, input_scale=1.0) -> dict:
    if head not in HEADS:
        raise ValueError(f"unknown head {head!r}")
    if hidden < 1 or static < 1:
        raise ValueError("layer sizes must be positive")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return {
        "version": ARCH_VERSION,
        "head": head,
        "feature_dim": int(feature_dim),
        "num_actions": int(num_actions),
        "hidden": int(hidden),
        "static": int(static),
        "layer_norm": bool(layer_norm),
        "alpha": float(alpha),
        "input_scale": float(input_scale),
    }


def init_params(arch: dict, seed: int = 0) -> ParameterSet:
    """Uniform ``+-1/sqrt(fan_in)`` weights; LSTM forget-gate bias starts at 1."""
    rng = rng_mod.stream(seed, "meta/init")
    d, A, H, S = arch["feature_dim"], arch["num_actions"], arch["hidden"], arch["static"]

    def uni(fan_in, shape):
        k = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-k, k, size=shape)

    def lstm_bias():
        b = uni(H, 4 * H)
        b[H : 2 * H] = 1.0
        return b

    ps = ParameterSet()
    ps.add("static.W", uni(d, (d, S)))
    ps.add("static.b", uni(d, S))
    ps.add("lstm1.W", uni(H, (S + 2 * A + H, 4 * H)))
    ps.add("lstm1.b", lstm_bias())
    ps.add("lstm2.W", uni(H, (2 * H + H, 4 * H)))
    ps.add("lstm2.b", lstm_bias())
    ps.add("out.W", uni(H, (H, A)))
    ps.add("out.b", uni(H, A))
    return ps


class MetaNetwork:
    """Stateless forward pass; recurrent state is passed in and returned."""

    def __init__(self, arch: dict):
        self.arch = dict(arch)

    @property
    def head(self) -> str:
        return self.arch["head"]

    def init_hidden(self, batch: int, n_inf: int) -> dict:
        H = self.arch["hidden"]
        z = np.zeros((batch * n_inf, H))
        return {"h1": z, "c1": z, "h2": z, "c2": z}

    def static_features(self, P, feats):
        return ad.tanh(ad.matmul(feats, P["static.W"]) + P["static.b"])

    def forward(self, P, feats, r, R, hidden, mask, static=None):
        """One synchronized pass over every infostate of every game.

        ``P`` maps parameter names to arrays or tensors, ``feats`` is
        ``(n_inf, d)``, ``r`` and ``R`` are ``(B, n_inf, A)``.  Returns the
        head output ``(B, n_inf, A)`` and the new hidden dict.
        """
        arch = self.arch
        B, n, A = ad.value(r).shape
        if A != arch["num_actions"]:
            raise ValueError(f"network expects {arch['num_actions']} actions, got {A}")
        if feats.shape[-1] != arch["feature_dim"]:
            raise ValueError(
                f"infostate encoding has dimension {feats.shape[-1]}, network expects {arch['feature_dim']}"
            )
        H = arch["hidden"]
        if static is None:
            static = self.static_features(P, feats)
        s = ad.broadcast_to(static, (B, n, arch["static"]))
        scale = arch["input_scale"]
        x = ad.concat([s, r * scale, R * scale], axis=-1).reshape(B * n, arch["static"] + 2 * A)
        h1, c1 = lstm_cell(x, hidden["h1"], hidden["c1"], P["lstm1.W"], P["lstm1.b"])
        y1 = ad.layer_norm(h1) if arch["layer_norm"] else h1
        y1 = y1.reshape(B, n, H)
        pooled = ad.max_over_axis(y1, axis=1, keepdims=True)
        pooled = ad.broadcast_to(pooled, (B, n, H))
        x2 = ad.concat([y1, pooled], axis=-1).reshape(B * n, 2 * H)
        h2, c2 = lstm_cell(x2, hidden["h2"], hidden["c2"], P["lstm2.W"], P["lstm2.b"])
        y2 = ad.layer_norm(h2) if arch["layer_norm"] else h2
        logits = (ad.matmul(y2, P["out.W"]) + P["out.b"]).reshape(B, n, A)
        if self.head == "noa":
            out = ad.softmax(logits, mask=mask)
        else:
            out = ad.sigmoid(logits) * (arch["alpha"] * mask)
        return out, {"h1": h1, "c1": c1, "h2": h2, "c2": c2}
