"""Self-play meta-loss, its diagnostics and the rejected cumulative-regret loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import games as G
from .. import regret as RG
from ..autodiff import tensor as ad
from ..cfr import SelfPlay

ENTROPY_COEF = 0.1


def entropy_weight(epoch: int, c0: float = ENTROPY_COEF) -> float:
    """Entropy-bonus weight, decaying as ``c0 / epoch`` (epochs count from 1)."""
    return c0 / max(int(epoch), 1)


def unroll(batch, kind, network, params, T, **kwargs) -> SelfPlay:
    """Run ``T`` self-play steps; under an active tape every step is recorded."""
    return SelfPlay(batch, kind, network=network, params=params, **kwargs).run(T)


def regret_part(run: SelfPlay):
    """Per game: sum over steps and infostates of the largest instantaneous regret."""
    total = run.regret_terms[0]
    for term in run.regret_terms[1:]:
        total = total + term
    return total


def entropy_part(run: SelfPlay):
    total = run.entropy_terms[0]
    for term in run.entropy_terms[1:]:
        total = total + term
    return total


def meta_loss(run: SelfPlay, epoch: int = 1, c0: float = ENTROPY_COEF):
    """Batch mean of the regret part minus the decaying entropy bonus."""
    B = len(run.batch)
    loss = ad.sum_(regret_part(run)) / B
    w = entropy_weight(epoch, c0)
    if w:
        loss = loss - ad.sum_(entropy_part(run)) * (w / B)
    return loss


def rejected_loss_eq3(run: SelfPlay):
    """Batch mean over games of ``sum_t sum_s max_a R^t(s)[a]`` (diagnostic only)."""
    total = run.cumulative_terms[0]
    for term in run.cumulative_terms[1:]:
        total = total + term
    return ad.sum_(total) / len(run.batch)


@dataclass
class MetaLossReport:
    total: float
    regret_part: np.ndarray  # (B,)
    entropy_bonus: float
    step_terms: np.ndarray  # (T, B)
    bound_terms: np.ndarray  # (B,) sum over infostates of max(max_a R^T, 0)
    ext_regret: np.ndarray | None  # (B, 2) measured external regrets when logged

    def chain_holds(self, tol=1e-7) -> bool:
        ok = np.all(self.regret_part + tol >= self.bound_terms)
        if self.ext_regret is not None:
            ok = ok and np.all(self.bound_terms + tol >= self.ext_regret.sum(axis=1))
        return bool(ok)


def report(run: SelfPlay, epoch: int = 1, c0: float = ENTROPY_COEF) -> MetaLossReport:
    steps = np.array([np.asarray(ad.value(t)) for t in run.regret_terms])
    ent = float(np.sum([np.sum(ad.value(t)) for t in run.entropy_terms]))
    B = len(run.batch)
    w = entropy_weight(epoch, c0)
    reg = steps.sum(axis=0)
    ext = run.logs[-1].ext_regret if run.logs else None
    return MetaLossReport(float(reg.sum() / B - w * ent / B), reg, w * ent / B, steps,
                          run.regret_bound(), ext)


def prediction_error(run: SelfPlay) -> np.ndarray:
    """``||p^t - r^t||_2`` per step and game, shape ``(T, B)``."""
    if not run.info.predictive:
        raise ValueError(f"{run.info.name} makes no regret predictions")
    if not run.logs:
        raise ValueError("run was not logged")
    return np.array([log.pred_err for log in run.logs])


def profile_terms(game: G.GameTree, profiles):
    """Per-step loss terms for an explicit simultaneous trajectory of profiles.

    Returns two lists over ``t``: the summed largest instantaneous regret and
    the summed largest cumulative regret (entries may be tensors).
    """
    st = game.structure
    R = np.zeros((st.n_inf, st.A))
    inst, cum = [], []
    for sigma in profiles:
        x = G.counterfactual_values(st, st.chance, st.util, sigma)
        r = RG.instantaneous_regret(sigma, x, st.mask)
        R = R + r
        inst.append(ad.sum_(RG.max_regret(r, st.mask)))
        cum.append(ad.sum_(RG.max_regret(R, st.mask)))
    return inst, cum
