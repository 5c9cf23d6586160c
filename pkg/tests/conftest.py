"""Shared independent oracles for the test suite.

The oracles walk the node list recursively and never touch the compiled
array engine, so agreement between the two is meaningful.
"""

import numpy as np
import pytest

from metaregret import games as G


def walk_terminals(g, sigma):
    """Yield ``(u1, chance_reach, reach_p1, reach_p2, path)`` for every terminal."""
    sigma = np.asarray(sigma)

    def rec(v, pc, p1, p2, path):
        node = g.nodes[v]
        if node.kind == G.TERMINAL:
            yield node.u1, pc, p1, p2, path
            return
        for a, ch in enumerate(node.children):
            if node.kind == G.CHANCE:
                yield from rec(ch, pc * node.probs[a], p1, p2, path)
            else:
                pa = sigma[node.infostate, a]
                step = (node.infostate, a)
                if node.player == 1:
                    yield from rec(ch, pc, p1 * pa, p2, path + (step,))
                else:
                    yield from rec(ch, pc, p1, p2 * pa, path + (step,))

    yield from rec(g.root, 1.0, 1.0, 1.0, ())


def brute_utility(g, sigma):
    return sum(u * pc * p1 * p2 for u, pc, p1, p2, _ in walk_terminals(g, sigma))


def brute_counterfactual(g, sigma, s):
    """Counterfactual action values at infostate ``s`` by history enumeration."""
    sigma = np.asarray(sigma)
    player = int(g.infostate_player[s])
    n = int(g.infostate_actions[s])
    out = np.zeros(n)

    def rec(v, pc, p_opp, active, own_after):
        # active: action taken at s on this path (None before reaching s)
        node = g.nodes[v]
        if node.kind == G.TERMINAL:
            if active is not None:
                u = node.u1 if player == 1 else -node.u1
                out[active] += u * pc * p_opp * own_after
            return
        for a, ch in enumerate(node.children):
            if node.kind == G.CHANCE:
                rec(ch, pc * node.probs[a], p_opp, active, own_after)
            elif node.player != player:
                rec(ch, pc, p_opp * sigma[node.infostate, a], active, own_after)
            elif node.infostate == s and active is None:
                rec(ch, pc, p_opp, a, own_after)
            elif active is None:
                # own actions before s are not weighted (player plays to reach s)
                rec(ch, pc, p_opp, None, own_after)
            else:
                rec(ch, pc, p_opp, active, own_after * sigma[node.infostate, a])

    rec(g.root, 1.0, 1.0, None, 1.0)
    return out


def random_profile(g, rng):
    st = g.structure
    raw = rng.exponential(size=(st.n_inf, st.A)) * st.mask
    return raw / raw.sum(axis=1, keepdims=True)


@pytest.fixture(scope="session")
def kuhn():
    return G.kuhn_poker()


@pytest.fixture(scope="session")
def rps():
    return G.rock_paper_scissors()
