"""Self-play counterfactual regret minimization over batches of games.

:class:`SelfPlay` runs one local regret minimizer per infostate for every
game of a :class:`~metaregret.games.GameBatch`.  The same code path serves
plain numpy evaluation and meta-training: when the network parameters are
autodiff tensors under an active tape, every strategy, reward and regret is
recorded so the meta-loss can be differentiated through the whole run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import games as G
from . import regret as RG
from .autodiff import tensor as ad

SCHEDULES = ("simultaneous", "alternating")
AVERAGING = ("uniform", "linear", "discounted")


def _blend(m, new, old):
    """Rows where ``m`` is 1 take ``new``; the others keep ``old``."""
    if m is None:
        return new
    return new * m + old * (1.0 - m)


@dataclass
class StepLog:
    t: int
    expl_avg: np.ndarray
    expl_cur: np.ndarray
    eq1_bound: np.ndarray
    ext_regret: np.ndarray  # (B, 2)
    pred_err: np.ndarray
    wall_ms: float


@dataclass
class Trajectory:
    """Per-step strategies of a run, for replay oracles."""

    sigma: list = field(default_factory=list)  # logged profile sigma^t, (B, n_inf, A)
    faced: list = field(default_factory=list)  # profile each player's rewards were computed against


class SelfPlay:
    """Both players run the same regret-minimizer kind against each other.

    Parameters
    ----------
    batch:
        games sharing one tree structure.
    kind:
        a name from :data:`metaregret.regret.KINDS`.
    network, params:
        meta network and its parameters (arrays or tensors) for neural kinds.
    bypass:
        for the NPCFR family, replace the network offset by zero so the run
        reduces to predictive regret matching.
    oblivious:
        detach counterfactual rewards from the graph (diagnostic only).
    log:
        compute exploitability, the regret bound, external regrets and
        prediction error after every step.
    """

    def __init__(self, batch, kind, *, schedule=None, averaging=None, network=None, params=None,
                 bypass=False, oblivious=False, eta=None, drm=None, log=False,
                 keep_trajectory=False, delay_ms=0.0):
        if isinstance(batch, G.GameTree):
            batch = G.GameBatch.of([batch])
        self.batch = batch
        self.info = RG.kind_info(kind)
        sched, avg = RG.default_schedule(self.info)
        self.schedule = schedule or sched
        self.averaging = averaging or avg
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.averaging not in AVERAGING:
            raise ValueError(f"unknown averaging {self.averaging!r}")
        if self.info.neural and network is None and not (bypass and self.info.neural == "npcfr"):
            raise ValueError(f"{self.info.name} needs a meta network")
        self.network = network
        self.params = params
        self.bypass = bypass
        self.oblivious = oblivious
        self.drm = {**RG.DRM_DEFAULTS, **(drm or {})}
        self.log_enabled = log
        self.delay_ms = float(delay_ms)

        st = batch.structure
        self.st = st
        B, n, A = len(batch), st.n_inf, st.A
        self.shape = (B, n, A)
        self.mask = st.mask
        self.chance = batch.chance
        self.util = batch.util
        if eta is None:
            rng_ = (batch.util.max(axis=1) - batch.util.min(axis=1)).reshape(B, 1, 1)
            eta = 1e-6 * rng_
        self.eta = eta
        self.pmask = {i: st.player_mask[i] for i in (1, 2)}

        z = np.zeros(self.shape)
        self.R = z
        self.r = z
        self.p = z
        self.t = 0
        self.avg_num = z.copy()
        self.hidden = network.init_hidden(B, n) if network is not None else None
        self._static = None
        self.regret_terms: list = []  # per step: (B,) sum over infostates of max_a r
        self.entropy_terms: list = []  # per step: (B,) sum over infostates of H(sigma)
        self.cumulative_terms: list = []  # per step: (B,) sum over infostates of max_a R
        self.logs: list[StepLog] = []
        self.trajectory = Trajectory() if keep_trajectory else None
        self._ext = None
        self.sigma = G.uniform_strategy(st)[None].repeat(B, axis=0)
        if self.info.neural == "noa":
            self.sigma = self._network_pass(None)

    # ------------------------------------------------------------ internals

    def _rows(self, player):
        if player is None:
            return None, None
        m = self.pmask[player]
        return m, np.tile(m, (self.shape[0], 1))

    def _network_pass(self, player):
        m, m_flat = self._rows(player)
        if self._static is None:
            self._static = self.network.static_features(self.params, self.batch.features)
        out, hid = self.network.forward(self.params, self.batch.features, self.r, self.R,
                                        self.hidden, self.mask, static=self._static)
        self.hidden = {k: _blend(m_flat, hid[k], self.hidden[k]) for k in hid}
        return out

    def _cf_rewards(self, sigma):
        x = G.counterfactual_values(self.st, self.chance, self.util, sigma)
        if self.oblivious and ad.is_tensor(x):
            x = ad.Tensor(ad.value(x))
        return x

    def _observe(self, sigma, x, player):
        """Regret update and next strategy for ``player``'s rows (``None``: all rows)."""
        m, _ = self._rows(player)
        r = RG.instantaneous_regret(sigma, x, self.mask)
        R_new = RG.update_regret(self.info, self.R, r, self.t, self.drm)
        self.R = _blend(m, R_new, self.R)
        self.r = _blend(m, r, self.r)
        info = self.info
        if info.neural == "noa":
            new_sigma = self._network_pass(player)
        else:
            if info.predictive:
                if info.neural == "npcfr" and not self.bypass:
                    p_new = self.r + self._network_pass(player)
                else:
                    p_new = self.r
                self.p = _blend(m, p_new, self.p)
                p = RG.smooth_suppress(self.R, self.p, self.eta) if info.smooth else self.p
                new_sigma = RG.regret_matching(self.R, p, self.mask)
            else:
                new_sigma = RG.regret_matching(self.R, None, self.mask)
        self.sigma = _blend(m, new_sigma, self.sigma)
        return r

    # ----------------------------------------------------------------- step

    def step(self):
        """One self-play iteration; returns the instantaneous regrets used in the loss."""
        t0 = time.perf_counter()
        self.t += 1
        sigma_t = self.sigma
        p_used = self.p
        if self.schedule == "simultaneous":
            x = self._cf_rewards(sigma_t)
            r = self._observe(sigma_t, x, None)
            faced = sigma_t
        else:
            x1 = self._cf_rewards(sigma_t)
            r1 = self._observe(sigma_t, x1, 1)
            sigma_mid = self.sigma  # player 1 rows refreshed, player 2 rows still sigma^t
            x2 = self._cf_rewards(sigma_mid)
            r2 = self._observe(sigma_mid, x2, 2)
            r = r1 * self.pmask[1] + r2 * self.pmask[2]
            faced = sigma_mid
        self.regret_terms.append(ad.sum_(RG.max_regret(r, self.mask), axis=-1))
        self.entropy_terms.append(ad.sum_(ad.entropy(sigma_t), axis=-1))
        self.cumulative_terms.append(ad.sum_(RG.max_regret(self.R, self.mask), axis=-1))

        sig_v = np.asarray(ad.value(sigma_t))
        faced_v = np.asarray(ad.value(faced))
        self._accumulate(sig_v)
        if self.trajectory is not None:
            self.trajectory.sigma.append(sig_v.copy())
            self.trajectory.faced.append(faced_v.copy())
        if self.delay_ms > 0:
            time.sleep(self.delay_ms / 1000.0)
        if self.log_enabled:
            self._log(sig_v, faced_v, ad.value(p_used), ad.value(r), t0)
        return r

    def run(self, T: int):
        for _ in range(T):
            self.step()
        return self

    # ------------------------------------------------------------ averaging

    def _accumulate(self, sigma):
        reach = G.infostate_reach(self.st, sigma)[..., None]
        if self.averaging == "discounted":
            if self.t > 1:
                self.avg_num = self.avg_num * ((self.t - 1) / self.t) ** self.drm["gamma"]
            w = 1.0
        else:
            w = RG.average_weight(self.averaging, self.t)
        self.avg_num = self.avg_num + w * reach * sigma

    def average_strategy(self) -> np.ndarray:
        if self.t == 0:
            raise ValueError("no iterations have been run")
        return ad.normalize_or_uniform(self.avg_num * self.mask, self.mask)

    def current_strategy(self) -> np.ndarray:
        return np.asarray(ad.value(self.sigma))

    # -------------------------------------------------------------- logging

    def regret_bound(self) -> np.ndarray:
        """Sum over both players' infostates of ``max(max_a R, 0)``, per game."""
        R = np.asarray(ad.value(self.R))
        return np.maximum(RG.max_regret(R, self.mask), 0.0).sum(axis=-1)

    def _ext_setup(self):
        st = self.st
        pure = {}
        for i in (1, 2):
            prof = G.pure_strategies(self.batch.games[0], i)
            x1, x2 = G.terminal_reach(st, prof)
            pure[i] = x1 if i == 1 else x2
        self._ext = {"pure": pure,
                     "cum_dev": {i: np.zeros((len(self.batch), pure[i].shape[0])) for i in (1, 2)},
                     "cum_act": np.zeros((len(self.batch), 2))}

    def _update_ext(self, sigma, faced):
        if self._ext is None:
            self._ext_setup()
        e = self._ext
        cu = self.chance * self.util
        # player 1 faced sigma_2^t; player 2 faced player 1's part of `faced`
        _, x2 = G.terminal_reach(self.st, sigma)
        x1f, _ = G.terminal_reach(self.st, faced)
        x1, _ = G.terminal_reach(self.st, sigma)
        _, x2f = G.terminal_reach(self.st, faced)
        e["cum_dev"][1] += (cu * x2) @ e["pure"][1].T
        e["cum_dev"][2] += -(cu * x1f) @ e["pure"][2].T
        e["cum_act"][:, 0] += (cu * x1 * x2).sum(axis=-1)
        e["cum_act"][:, 1] += -(cu * x1f * x2f).sum(axis=-1)
        ext = np.stack([e["cum_dev"][1].max(axis=1), e["cum_dev"][2].max(axis=1)], axis=1)
        return ext - e["cum_act"]

    def _log(self, sigma, faced, p_used, r, t0):
        st = self.st
        avg = self.average_strategy()
        expl_avg = exploitability_batch(st, self.chance, self.util, avg)
        expl_cur = exploitability_batch(st, self.chance, self.util, sigma)
        ext = self._update_ext(sigma, faced)
        if self.info.predictive:
            pe = np.sqrt(((p_used - r) ** 2).sum(axis=(-1, -2)))
        else:
            pe = np.full(len(self.batch), np.nan)
        wall = (time.perf_counter() - t0) * 1000.0
        self.logs.append(StepLog(self.t, expl_avg, expl_cur, self.regret_bound(), ext, pe, wall))


# --------------------------------------------------------------- evaluation


def exploitability_batch(st, chance, util, sigma) -> np.ndarray:
    """Half the sum of both best-response values, per game."""
    v1, _ = G.best_response_batch(st, chance, util, sigma, 1)
    v2, _ = G.best_response_batch(st, chance, util, sigma, 2)
    return 0.5 * (v1 + v2)


def best_response(g: G.GameTree, sigma_opp, i: int):
    """Best response of player ``i`` and its value ``u_i(br, sigma_opp)``.

    ``sigma_opp`` needs to cover the opponent's infostates only.
    """
    st = g.structure
    opp = 2 if i == 1 else 1
    sig = G.strategy_array(g, sigma_opp, players=(opp,))
    rows = st.player_mask[i][:, 0] > 0
    sig[rows] = G.uniform_strategy(st)[rows]
    value, br = G.best_response_batch(st, st.chance, st.util, sig, i)
    return G.strategy_dict(g, br, i), float(value)


def exploitability(g: G.GameTree, sigma) -> float:
    st = g.structure
    return float(exploitability_batch(st, st.chance, st.util, G.strategy_array(g, sigma)))


def solve(game, kind, T, **kwargs) -> SelfPlay:
    """Run ``T`` self-play iterations of ``kind`` on ``game`` (tree or batch)."""
    return SelfPlay(game, kind, **kwargs).run(T)


def cfr_iteration(run: SelfPlay) -> SelfPlay:
    run.step()
    return run


def average_strategy(run: SelfPlay, game_index: int = 0) -> dict:
    g = run.batch.games[game_index]
    return G.strategy_dict(g, run.average_strategy()[game_index])


def regret_bound_eq1(run: SelfPlay, game_index: int = 0) -> float:
    return float(run.regret_bound()[game_index])
