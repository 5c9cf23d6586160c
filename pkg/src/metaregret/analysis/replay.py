"""External regret measured by replaying a logged trajectory."""

from __future__ import annotations

import numpy as np

from .. import games as G


def external_regret_replay(trajectory, g: G.GameTree, i: int, faced=None, limit=10**6) -> float:
    """``max_dev sum_t [u_i(dev, sigma_opp^t) - u_i(sigma^t)]`` over pure deviations.

    ``trajectory`` is a sequence of full profiles ``sigma^t`` (padded arrays)
    or a :class:`~metaregret.cfr.Trajectory`.  ``faced`` optionally gives, per
    step, the profile whose opponent part player ``i`` actually played
    against (alternating updates); it defaults to ``sigma^t`` itself.
    """
    if hasattr(trajectory, "sigma"):
        faced = trajectory.faced if faced is None else faced
        trajectory = trajectory.sigma
    sig = [np.asarray(s) for s in trajectory]
    if sig and sig[0].ndim == 3:
        if sig[0].shape[0] != 1:
            raise ValueError("pass a single-game trajectory")
        sig = [s[0] for s in sig]
    if faced is None:
        faced = sig
    else:
        faced = [np.asarray(f)[0] if np.ndim(f) == 3 else np.asarray(f) for f in faced]
    st = g.structure
    pure = G.pure_strategies(g, i, limit)
    x1p, x2p = G.terminal_reach(st, pure)
    dev_reach = x1p if i == 1 else x2p
    cu = st.chance * st.util * (1.0 if i == 1 else -1.0)
    dev_total = np.zeros(pure.shape[0])
    actual = 0.0
    for s, f in zip(sig, faced):
        own = G.terminal_reach(st, s)[i - 1]
        opp = G.terminal_reach(st, f)[2 - i]
        dev_total += dev_reach @ (cu * opp)
        actual += float(np.sum(cu * own * opp))
    return float(dev_total.max() - actual)
