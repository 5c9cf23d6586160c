"""Meta-training loop: unroll self-play on a batch of games, backprop, Adam."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import games as G
from .. import regret as RG
from ..autodiff import tensor as ad
from ..autodiff.optim import AdamMoments, adam_step, clip_by_global_norm
from ..autodiff.params import ParameterSet
from ..cfr import SelfPlay
from . import loss as L
from .network import MetaNetwork, architecture, init_params

# Held-out games come from a distribution seed never used for training.
EVAL_SEED = 7_777_777


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class MetaTrainConfig:
    family: str = "rock_paper_scissors"
    family_params: dict = field(default_factory=dict)
    kind: str = "NPCFR_PLUS"
    T: int = 32
    epochs: int = 64
    batch_games: int = 8
    steps_per_epoch: int = 8
    hidden: int = 64
    static: int = 16
    alpha: float = 1.0
    layer_norm: bool | None = None  # None: on for matrix families, off for poker
    input_scale: float = 1.0
    lr: float = 1e-3
    entropy_coef: float = L.ENTROPY_COEF
    clip_norm: float = 10.0
    seed: int = 0
    eval_games: int = 0
    eval_every: int = 0
    check_chain: bool = False

    def __post_init__(self):
        if self.T < 1 or self.batch_games < 1 or self.epochs < 1 or self.steps_per_epoch < 1:
            raise ValueError("T, epochs, steps_per_epoch and batch_games must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        info = RG.kind_info(self.kind)
        if not info.neural:
            raise ValueError(f"{self.kind} has nothing to meta-learn")
        if self.family not in G.FAMILIES:
            raise ValueError(f"unknown game family {self.family!r}")
        if self.layer_norm is None:
            self.layer_norm = self.family != "kuhn_poker"

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    entropy_term: float
    eval_expl_T: float
    wall_ms: float
    grad_norm: float
    chain_ok: bool = True


def network_for(cfg: MetaTrainConfig, game: G.GameTree) -> MetaNetwork:
    head = RG.kind_info(cfg.kind).neural
    arch = architecture(head, game.features.shape[1], game.structure.A, hidden=cfg.hidden,
                        static=cfg.static, layer_norm=cfg.layer_norm, alpha=cfg.alpha,
                        input_scale=cfg.input_scale)
    return MetaNetwork(arch)


def training_batch(cfg: MetaTrainConfig, step: int) -> G.GameBatch:
    dist = G.GameDistribution(cfg.family, cfg.seed, cfg.family_params)
    return G.GameBatch.of(G.sample_games(dist, cfg.batch_games, start=step * cfg.batch_games))


def heldout_batch(family, count, params=None, seed=EVAL_SEED) -> G.GameBatch:
    return G.GameBatch.of(G.sample_games(G.GameDistribution(family, seed, params or {}), count))


def evaluate(network: MetaNetwork | None, params, kind, batch, T, **kwargs) -> SelfPlay:
    """Numpy self-play run with full logging (no tape)."""
    P = {k: np.asarray(v) for k, v in params.items()} if params is not None else None
    return SelfPlay(batch, kind, network=network, params=P, log=True, **kwargs).run(T)


def train_step(network, params: ParameterSet, batch, cfg: MetaTrainConfig, epoch: int):
    """Loss value, entropy term, gradient dict and the (value-only) run."""
    leaves = params.leaves()
    with ad.Tape() as tape:
        run = SelfPlay(batch, cfg.kind, network=network, params=leaves, log=cfg.check_chain)
        run.run(cfg.T)
        loss = L.meta_loss(run, epoch, cfg.entropy_coef)
    names = list(leaves)
    grads = ad.backward(tape, loss, [leaves[k] for k in names])
    return float(loss.value), dict(zip(names, grads)), run


def train(cfg: MetaTrainConfig, progress=None):
    """Returns ``(params, network, logs)``; raises :class:`TrainingDiverged` on NaN."""
    probe = training_batch(cfg, 0).games[0]
    network = network_for(cfg, probe)
    params = init_params(network.arch, cfg.seed)
    moments = AdamMoments(params)
    logs: list[EpochLog] = []
    eval_batch = heldout_batch(cfg.family, cfg.eval_games, cfg.family_params) if cfg.eval_games else None
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        losses, ents, norms = [], [], []
        chain_ok = True
        for _ in range(cfg.steps_per_epoch):
            batch = training_batch(cfg, step)
            step += 1
            try:
                value, grads, run = train_step(network, params, batch, cfg, epoch)
            except FloatingPointError as exc:
                raise TrainingDiverged(f"non-finite value in epoch {epoch}, step {step}: {exc}") from exc
            if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingDiverged(f"non-finite loss or gradient in epoch {epoch}, step {step}")
            grads, norm = clip_by_global_norm(grads, cfg.clip_norm)
            adam_step(params, grads, moments, lr=cfg.lr)
            losses.append(value)
            rep = L.report(run, epoch, cfg.entropy_coef)
            ents.append(rep.entropy_bonus)
            norms.append(norm)
            if cfg.check_chain:
                chain_ok = chain_ok and rep.chain_holds()
        eval_expl = float("nan")
        if eval_batch is not None and cfg.eval_every and (epoch % cfg.eval_every == 0 or epoch == cfg.epochs):
            ev = evaluate(network, params, cfg.kind, eval_batch, cfg.T)
            eval_expl = float(np.median(ev.logs[-1].expl_avg))
        logs.append(EpochLog(epoch, float(np.mean(losses)), float(np.mean(ents)), eval_expl,
                             (time.perf_counter() - t0) * 1000.0, float(np.mean(norms)), chain_ok))
        if progress is not None:
            progress(logs[-1])
    return params, network, logs
