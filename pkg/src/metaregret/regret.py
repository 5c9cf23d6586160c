"""Local regret minimizers over per-infostate action vectors.

Every function works on arrays with arbitrary leading axes (a single
infostate ``(A,)``, a whole game ``(n_inf, A)`` or a batch of games
``(B, n_inf, A)``) and on autodiff tensors alike.  An optional 0/1 ``mask``
marks the legal actions of padded rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import tensor as ad


@dataclass(frozen=True)
class KindInfo:
    name: str
    display: str
    plus: bool = False  # clip cumulative regret at zero
    predictive: bool = False
    neural: str | None = None  # "noa" or "npcfr"
    smooth: bool = False  # suppress predictions when cumulative regret is tiny
    discounted: bool = False


KINDS = {
    k.name: k
    for k in [
        KindInfo("RM", "CFR"),
        KindInfo("RM_PLUS", "CFR+", plus=True),
        KindInfo("PRM", "PCFR", predictive=True),
        KindInfo("PRM_PLUS", "PCFR+", plus=True, predictive=True),
        KindInfo("DRM", "DCFR", discounted=True),
        KindInfo("SPRM_PLUS", "SPCFR+", plus=True, predictive=True, smooth=True),
        KindInfo("NOA", "NOA", neural="noa"),
        KindInfo("NOA_PLUS", "NOA+", plus=True, neural="noa"),
        KindInfo("NPCFR", "NPCFR", predictive=True, neural="npcfr"),
        KindInfo("NPCFR_PLUS", "NPCFR+", plus=True, predictive=True, neural="npcfr"),
        KindInfo("SNPRM", "SNPCFR+", plus=True, predictive=True, neural="npcfr", smooth=True),
    ]
}

DRM_DEFAULTS = {"alpha": 1.5, "beta": 0.0, "gamma": 2.0}


def kind_info(kind) -> KindInfo:
    if isinstance(kind, KindInfo):
        return kind
    try:
        return KINDS[str(kind).upper()]
    except KeyError:
        raise ValueError(f"unknown minimizer kind {kind!r}") from None


def default_schedule(kind) -> tuple[str, str]:
    """``(schedule, averaging)`` used when a run does not override them."""
    info = kind_info(kind)
    if info.plus:
        return "alternating", "linear"
    if info.discounted:
        return "simultaneous", "discounted"
    return "simultaneous", "uniform"


@dataclass
class MinimizerState:
    """Regret-minimizer bookkeeping for one or many infostates."""

    R: np.ndarray
    r_last: np.ndarray
    p: np.ndarray
    avg_num: np.ndarray
    avg_den: np.ndarray
    t: int = 0
    h: dict = field(default_factory=dict)


def init_state(shape) -> MinimizerState:
    shape = tuple(shape)
    z = np.zeros(shape)
    return MinimizerState(z.copy(), z.copy(), z.copy(), z.copy(), np.zeros(shape[:-1] + (1,)))


def _check_finite(*xs):
    for x in xs:
        if np.any(np.isnan(ad.value(x))):
            raise FloatingPointError("NaN in regret-minimizer input")


def regret_matching(R, p=None, mask=None):
    """``[R + p]^+`` normalised per row; all-zero rows fall back to uniform."""
    xi = R if p is None else R + p
    xi = ad.relu(xi)
    if mask is not None:
        xi = xi * mask
    return ad.normalize_or_uniform(xi, mask)


def instantaneous_regret(sigma, x, mask=None):
    """``r = x - <sigma, x> 1``, zero on padded actions."""
    ev = ad.sum_(sigma * x, axis=-1, keepdims=True)
    r = x - ev
    return r if mask is None else r * mask


def max_regret(r, mask=None):
    """Largest entry per row, ignoring padded actions."""
    return ad.max_over_axis(r, axis=-1, mask=mask)


def drm_discount(R, t: int, alpha=1.5, beta=0.0):
    """Scale positive parts by ``t^a/(t^a+1)`` and negative parts by ``t^b/(t^b+1)``."""
    if t <= 0:
        return R
    wp = t**alpha / (t**alpha + 1.0)
    wn = t**beta / (t**beta + 1.0)
    return ad.relu(R) * wp - ad.relu(-R) * wn


def smooth_suppress(R, p, eta):
    """Zero the prediction of every row whose cumulative regret has ``||R||_1 < eta``."""
    norm = np.abs(ad.value(R)).sum(axis=-1, keepdims=True)
    return p * (norm >= eta).astype(np.float64)


def next_strategy(kind, state: MinimizerState, mask=None, eta=None):
    """Strategy of the local minimizer given its state.

    The neural online algorithm has no closed form; its strategies come from
    the network in :mod:`metaregret.meta.network`.
    """
    info = kind_info(kind)
    if info.neural == "noa":
        raise ValueError("NOA strategies are produced by the meta network")
    _check_finite(state.R, state.p)
    if info.predictive:
        p = state.p
        if info.smooth and eta is not None:
            p = smooth_suppress(state.R, p, eta)
        return regret_matching(state.R, p, mask)
    return regret_matching(state.R, None, mask)


def update_regret(kind, R, r, t: int, params=None):
    """Cumulative regret after observing instantaneous regret ``r`` at step ``t``."""
    info = kind_info(kind)
    if info.discounted:
        prm = {**DRM_DEFAULTS, **(params or {})}
        R = drm_discount(R, t - 1, prm["alpha"], prm["beta"])
    R = R + r
    return ad.relu(R) if info.plus else R


def observe_reward(kind, state: MinimizerState, sigma, x, mask=None, offset=None, params=None):
    """Update ``state`` in place with counterfactual rewards ``x``; returns ``r``.

    ``offset`` is the network's prediction offset for the NPCFR family; when
    omitted (the bypass) the prediction is the last instantaneous regret, so
    the update coincides with predictive regret matching.
    """
    info = kind_info(kind)
    _check_finite(x)
    state.t += 1
    r = instantaneous_regret(sigma, x, mask)
    state.R = update_regret(info, state.R, r, state.t, params)
    state.r_last = r
    if info.predictive:
        state.p = r if offset is None else r + offset
    return r


def average_weight(mode: str, t: int) -> float:
    if mode == "uniform":
        return 1.0
    if mode == "linear":
        return float(t)
    raise ValueError(f"unknown averaging mode {mode!r}")


def accumulate_average(state: MinimizerState, sigma, mode="uniform", reach=1.0, t=None, gamma=2.0):
    """Add ``sigma`` (weighted by ``reach`` and the mode's step weight) to the average.

    ``t`` defaults to ``state.t``.  The discounted mode rescales the running
    numerator by ``((t-1)/t)^gamma`` before adding the new term.
    """
    t = state.t if t is None else t
    sigma = np.asarray(ad.value(sigma))
    reach = np.asarray(reach, dtype=np.float64)
    if reach.ndim:
        reach = reach[..., None]
    if mode == "discounted":
        if t > 1:
            scale = ((t - 1) / t) ** gamma
            state.avg_num = state.avg_num * scale
            state.avg_den = state.avg_den * scale
        w = 1.0
    else:
        w = average_weight(mode, t)
    state.avg_num = state.avg_num + w * reach * sigma
    state.avg_den = state.avg_den + w * reach * np.ones_like(state.avg_den)


def average_strategy(state: MinimizerState, mask=None):
    """Normalised average; rows never reached fall back to uniform."""
    num = np.asarray(state.avg_num)
    if mask is None:
        mask = np.ones_like(num)
    return ad.normalize_or_uniform(num * mask, mask)
