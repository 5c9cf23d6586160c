"""Finite-difference checks of the whole unrolled meta-loss graph."""

from __future__ import annotations

import numpy as np

from .. import games as G
from .. import rng as rng_mod
from ..autodiff import gradcheck as gc
from ..autodiff import tensor as ad
from ..cfr import SelfPlay
from . import loss as L
from .network import MetaNetwork, architecture, init_params

TOLERANCE = 1e-4
KINDS = ("NOA", "NOA_PLUS", "NPCFR", "NPCFR_PLUS")


def _tiny_setup(draw: int, kind: str, hidden=4, T=4):
    rng = rng_mod.stream(draw, "gradcheck/meta")
    game = G.matrix_game(rng.uniform(-1.0, 1.0, (2, 2)))
    head = "noa" if kind.startswith("NOA") else "npcfr"
    net = MetaNetwork(architecture(head, 2, 2, hidden=hidden, static=3, layer_norm=bool(draw % 2),
                                   alpha=1.0 + draw % 2))
    params = init_params(net.arch, seed=draw)
    # spread weights beyond the default scale so the head output is far from uniform
    for name in params.names():
        params[name] = params[name] * 2.0
    return game, net, params


def meta_loss_fn(game, net, names, kind, T, oblivious=False):
    def f(*arrays):
        P = dict(zip(names, arrays))
        run = SelfPlay(G.GameBatch.of([game]), kind, network=net, params=P, oblivious=oblivious)
        run.run(T)
        return L.meta_loss(run, epoch=1)

    return f


def meta_graph_checks(draws=100, T=4, hidden=4, n_dirs=3, kinds=KINDS, full=False) -> list[gc.CheckResult]:
    """Checks of ``d loss / d theta`` with a fresh random network and game per draw.

    By default each draw compares the tape gradient with central differences
    along ``n_dirs`` random directions; ``full=True`` sweeps every parameter.
    """
    out = []
    for kind in kinds:
        worst = 0.0
        for d in range(draws):
            game, net, params = _tiny_setup(d, kind, hidden, T)
            names = params.names()
            fn = meta_loss_fn(game, net, names, kind, T)
            arrays = [params[k] for k in names]
            if full:
                err = gc.check_full(fn, arrays)
            else:
                err = gc.check_directional(fn, arrays, rng_mod.stream(d, f"gradcheck/{kind}"), n_dirs=n_dirs)
            worst = max(worst, err)
        out.append(gc.CheckResult(f"meta_graph_{kind.lower()}", draws, worst, TOLERANCE))
    return out


def gradient(game, net, params, kind, T, oblivious=False) -> np.ndarray:
    names = params.names()
    _, grads = gc.tape_gradient(meta_loss_fn(game, net, names, kind, T, oblivious),
                                [params[k] for k in names])
    return np.concatenate([g.ravel() for g in grads])


def oblivious_gap(draw: int, kind="NOA", T=4) -> float:
    """Norm of the difference between the self-play and detached-reward gradients."""
    game, net, params = _tiny_setup(draw, kind, T=T)
    return float(np.linalg.norm(gradient(game, net, params, kind, T)
                                - gradient(game, net, params, kind, T, oblivious=True)))
