"""Two-player zero-sum game trees, sampled game families and exact evaluation.

A :class:`GameTree` is compiled once into a :class:`TreeStructure`, a set of
constant 0/1 matrices over the padded ``(infostate, action)`` grid.  All tree
computations (realization plans, counterfactual rewards, expected utility)
are then a handful of matrix products and elementwise operations, which work
unchanged on numpy arrays and on autodiff tensors.  Games of one family share
their structure and differ only in chance reach and terminal utilities, so a
batch of games is evaluated in one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .autodiff import tensor as ad

CHANCE = "chance"
DECISION = "decision"
TERMINAL = "terminal"

FAMILIES = ("rock_paper_scissors", "uniform_matrix_game", "matching_pennies", "kuhn_poker")

# Encoding layout versions, bumped whenever a family's features change.
ENCODING_VERSION = {"matrix": 1, "kuhn_poker": 1}


class GameError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str
    children: tuple = ()
    probs: tuple = ()
    player: int = 0
    infostate: int = -1
    u1: float = 0.0

    @property
    def num_actions(self) -> int:
        return len(self.children)


def chance_node(probs, children) -> Node:
    return Node(CHANCE, tuple(children), tuple(float(p) for p in probs))


def decision_node(player, infostate, children) -> Node:
    return Node(DECISION, tuple(children), player=int(player), infostate=int(infostate))


def terminal_node(u1) -> Node:
    return Node(TERMINAL, u1=float(u1))


class GameTree:
    """Immutable extensive-form game with utilities stored for player 1 only."""

    def __init__(self, nodes, root=0, family="custom", features=None, matrix=None, labels=None):
        self.nodes = tuple(nodes)
        self.root = int(root)
        self.family = family
        self.matrix = None if matrix is None else np.array(matrix, dtype=np.float64)
        self._validate()
        if features is None:
            features = np.eye(2)[self.infostate_player - 1]
        self.features = np.array(features, dtype=np.float64)
        if self.features.shape[0] != self.num_infostates:
            raise GameError("one feature row per infostate is required")
        self.labels = list(labels) if labels is not None else [str(s) for s in range(self.num_infostates)]

    # ------------------------------------------------------------ validation

    def _validate(self):
        n = len(self.nodes)
        if not 0 <= self.root < n:
            raise GameError("root index out of range")
        parent = [-1] * n
        seen = [False] * n
        order = []
        stack = [self.root]
        seen[self.root] = True
        while stack:
            v = stack.pop()
            order.append(v)
            node = self.nodes[v]
            if node.kind == TERMINAL and node.children:
                raise GameError(f"terminal node {v} has children")
            if node.kind != TERMINAL and not node.children:
                raise GameError(f"non-terminal node {v} has no children")
            for ch in node.children:
                if not 0 <= ch < n:
                    raise GameError(f"child index {ch} out of range")
                if seen[ch]:
                    raise GameError(f"node {ch} has two parents or lies on a cycle")
                seen[ch] = True
                parent[ch] = v
                stack.append(ch)
        if not all(seen):
            raise GameError("every node must be reachable from the root")

        info_player: dict[int, int] = {}
        info_actions: dict[int, int] = {}
        info_history: dict[int, tuple] = {}
        history = {self.root: ((), ())}  # own (infostate, action) sequences per player
        for v in order:
            node = self.nodes[v]
            hist = history[v]
            if node.kind == CHANCE:
                p = np.asarray(node.probs, dtype=np.float64)
                if len(p) != len(node.children):
                    raise GameError(f"chance node {v}: one probability per child")
                if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                    raise GameError(f"chance node {v}: probabilities must be >= 0 and sum to 1")
                for ch in node.children:
                    history[ch] = hist
            elif node.kind == DECISION:
                s, pl = node.infostate, node.player
                if pl not in (1, 2):
                    raise GameError(f"decision node {v}: player must be 1 or 2")
                if s in info_player:
                    if info_player[s] != pl or info_actions[s] != node.num_actions:
                        raise GameError(f"infostate {s}: inconsistent player or action count")
                    if info_history[s] != hist[pl - 1]:
                        raise GameError(f"infostate {s}: violates perfect recall")
                else:
                    info_player[s] = pl
                    info_actions[s] = node.num_actions
                    info_history[s] = hist[pl - 1]
                for a, ch in enumerate(node.children):
                    own = list(hist)
                    own[pl - 1] = hist[pl - 1] + ((s, a),)
                    history[ch] = tuple(own)
            elif node.kind == TERMINAL:
                if not np.isfinite(node.u1):
                    raise GameError(f"terminal node {v}: utility must be finite")
            else:
                raise GameError(f"unknown node kind {node.kind!r}")

        m = len(info_player)
        if sorted(info_player) != list(range(m)):
            raise GameError("infostate ids must be dense integers 0..n-1")
        self.num_infostates = m
        self.infostate_player = np.array([info_player[s] for s in range(m)], dtype=np.int64)
        self.infostate_actions = np.array([info_actions[s] for s in range(m)], dtype=np.int64)
        self._parent_seq = [info_history[s][-1] if info_history[s] else None for s in range(m)]
        self._order = order
        self._history = history

    # ---------------------------------------------------------------- access

    def __len__(self):
        return len(self.nodes)

    def infostates(self, player=None):
        ids = range(self.num_infostates)
        return [s for s in ids if player is None or self.infostate_player[s] == player]

    @property
    def utility_range(self) -> float:
        u = [nd.u1 for nd in self.nodes if nd.kind == TERMINAL]
        return float(max(u) - min(u))

    @cached_property
    def structure(self) -> "TreeStructure":
        return TreeStructure.compile(self)

    # ------------------------------------------------------------------ json

    def to_dict(self) -> dict:
        nodes = []
        for nd in self.nodes:
            if nd.kind == CHANCE:
                nodes.append({"kind": CHANCE, "probs": list(nd.probs), "children": list(nd.children)})
            elif nd.kind == DECISION:
                nodes.append({"kind": DECISION, "player": nd.player, "infostate": nd.infostate,
                              "num_actions": nd.num_actions, "children": list(nd.children)})
            else:
                nodes.append({"kind": TERMINAL, "u1": nd.u1})
        return {"family": self.family, "root": self.root, "nodes": nodes,
                "features": self.features.tolist(), "labels": self.labels}

    @classmethod
    def from_dict(cls, doc) -> "GameTree":
        nodes = []
        for d in doc["nodes"]:
            if d["kind"] == CHANCE:
                nodes.append(chance_node(d["probs"], d["children"]))
            elif d["kind"] == DECISION:
                if d["num_actions"] != len(d["children"]):
                    raise GameError("num_actions does not match children")
                nodes.append(decision_node(d["player"], d["infostate"], d["children"]))
            else:
                nodes.append(terminal_node(d["u1"]))
        return cls(nodes, doc.get("root", 0), doc.get("family", "custom"),
                   doc.get("features"), labels=doc.get("labels"))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "GameTree":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ------------------------------------------------------------------ structure


@dataclass
class TreeStructure:
    """Constant matrices describing a tree over the padded action grid.

    Flat index ``k = s * A + a`` addresses action ``a`` of infostate ``s``.
    """

    n_inf: int
    A: int
    player: np.ndarray  # (n_inf,) in {1, 2}
    mask: np.ndarray  # (n_inf, A) legal-action indicator
    depth: int  # longest own-decision chain of either player
    par_inf: np.ndarray  # (n_inf, K): 1 at the parent sequence of each infostate
    root_inf: np.ndarray  # (n_inf,): 1 if the infostate has no own parent sequence
    E1: np.ndarray  # (n_term, K): player-1 sequence leading to each terminal
    E2: np.ndarray
    e1_0: np.ndarray  # (n_term,): 1 if player 1 never acts before the terminal
    e2_0: np.ndarray
    chance: np.ndarray  # (n_term,) chance reach of this particular game
    util: np.ndarray  # (n_term,) player-1 utility of this particular game
    terminal_nodes: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.n_inf * self.A

    @cached_property
    def par(self) -> np.ndarray:
        return np.repeat(self.par_inf, self.A, axis=0)

    @cached_property
    def root_mask(self) -> np.ndarray:
        return np.repeat(self.root_inf, self.A) * self.mask.ravel()

    @cached_property
    def player_mask(self) -> dict:
        """Per player, an ``(n_inf, 1)`` 0/1 column selecting its infostates."""
        return {i: (self.player == i).astype(np.float64)[:, None] for i in (1, 2)}

    @property
    def n_term(self) -> int:
        return self.E1.shape[0]

    def same_shape(self, other: "TreeStructure") -> bool:
        return (
            self.A == other.A
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.player, other.player)
            and np.array_equal(self.par_inf, other.par_inf)
            and np.array_equal(self.E1, other.E1)
            and np.array_equal(self.E2, other.E2)
        )

    @classmethod
    def compile(cls, g: GameTree) -> "TreeStructure":
        n_inf = g.num_infostates
        A = int(g.infostate_actions.max()) if n_inf else 1
        K = n_inf * A
        mask = np.zeros((n_inf, A))
        for s in range(n_inf):
            mask[s, : g.infostate_actions[s]] = 1.0
        par_inf = np.zeros((n_inf, K))
        root_inf = np.zeros(n_inf)
        depth_of = np.zeros(n_inf, dtype=np.int64)
        for s in range(n_inf):
            ps = g._parent_seq[s]
            if ps is None:
                root_inf[s] = 1.0
            else:
                par_inf[s, ps[0] * A + ps[1]] = 1.0
        for v in g._order:
            nd = g.nodes[v]
            if nd.kind == DECISION:
                depth_of[nd.infostate] = len(g._history[v][nd.player - 1]) + 1
        terms = [v for v in g._order if g.nodes[v].kind == TERMINAL]
        terms.sort()
        n_term = len(terms)
        E1 = np.zeros((n_term, K))
        E2 = np.zeros((n_term, K))
        e1_0 = np.zeros(n_term)
        e2_0 = np.zeros(n_term)
        for j, v in enumerate(terms):
            h1, h2 = g._history[v]
            if h1:
                E1[j, h1[-1][0] * A + h1[-1][1]] = 1.0
            else:
                e1_0[j] = 1.0
            if h2:
                E2[j, h2[-1][0] * A + h2[-1][1]] = 1.0
            else:
                e2_0[j] = 1.0
        chance = _chance_reach(g, terms)
        util = np.array([g.nodes[v].u1 for v in terms])
        return cls(n_inf, A, g.infostate_player.copy(), mask, int(depth_of.max(initial=1)),
                   par_inf, root_inf, E1, E2, e1_0, e2_0, chance, util, terms)


def _chance_reach(g: GameTree, terms) -> np.ndarray:
    reach = {g.root: 1.0}
    for v in g._order:
        nd = g.nodes[v]
        for k, ch in enumerate(nd.children):
            reach[ch] = reach[v] * (nd.probs[k] if nd.kind == CHANCE else 1.0)
    return np.array([reach[v] for v in terms])


@dataclass
class GameBatch:
    """Games of one family evaluated together along a leading batch axis."""

    structure: TreeStructure
    chance: np.ndarray  # (B, n_term)
    util: np.ndarray  # (B, n_term)
    features: np.ndarray  # (n_inf, d)
    games: list

    @classmethod
    def of(cls, games) -> "GameBatch":
        if isinstance(games, GameTree):
            games = [games]
        games = list(games)
        st = games[0].structure
        for g in games[1:]:
            if not st.same_shape(g.structure):
                raise GameError("all games in a batch must share their tree structure")
            if not np.array_equal(g.features, games[0].features):
                raise GameError("all games in a batch must share infostate encodings")
        chance = np.stack([g.structure.chance for g in games])
        util = np.stack([g.structure.util for g in games])
        return cls(st, chance, util, games[0].features, games)

    def __len__(self):
        return len(self.games)

    @property
    def utility_range(self) -> float:
        return float(np.max(self.util) - np.min(self.util))


# --------------------------------------------------------------- tree engine


def _grid(st: TreeStructure, v):
    shape = ad.value(v).shape[:-1]
    return v.reshape(shape + (st.n_inf, st.A))


def _flat(st: TreeStructure, v):
    shape = ad.value(v).shape[:-2]
    return v.reshape(shape + (st.K,))


def realization(st: TreeStructure, sigma):
    """Realization weight of every sequence, shape ``(..., K)``.

    ``sigma`` is a behavioural profile of shape ``(..., n_inf, A)`` covering
    both players; each player's weights use only its own strategy.
    """
    sf = _flat(st, sigma)
    x = sf * st.root_mask
    for _ in range(st.depth - 1):
        x = sf * (x @ st.par.T + st.root_mask)
    return x


def terminal_reach(st: TreeStructure, sigma):
    """Per-terminal reach contributions ``(x1, x2)`` of players 1 and 2."""
    x = realization(st, sigma)
    return x @ st.E1.T + st.e1_0, x @ st.E2.T + st.e2_0


def infostate_reach(st: TreeStructure, sigma):
    """Own-player reach probability of each infostate, shape ``(..., n_inf)``."""
    x = realization(st, sigma)
    return x @ st.par_inf.T + st.root_inf


def counterfactual_values(st: TreeStructure, chance, util, sigma):
    """Counterfactual reward of every action of every infostate.

    Entry ``[s, a]`` is the acting player's expected utility for taking ``a``
    at ``s`` and following ``sigma`` afterwards, weighted by opponent and
    chance reach.  Shape ``(..., n_inf, A)``; padded actions are 0.
    """
    x1, x2 = terminal_reach(st, sigma)
    cu = chance * util
    direct = (cu * x2) @ st.E1 - (cu * x1) @ st.E2
    sf = _flat(st, sigma)
    v = direct
    for _ in range(st.depth - 1):
        inf_val = _grid(st, sf * v).sum(axis=-1)
        v = direct + inf_val @ st.par_inf
    return _grid(st, v)


def expected_value(st: TreeStructure, chance, util, sigma):
    """Player-1 expected utility, shape ``(...)``."""
    x1, x2 = terminal_reach(st, sigma)
    return (chance * util * x1 * x2).sum(axis=-1)


def best_response_batch(st: TreeStructure, chance, util, sigma, player: int):
    """Exact best response of ``player`` against the opponent part of ``sigma``.

    Returns ``(values, br)`` with ``values`` of shape ``(...)`` in the
    player's own utility units and ``br`` a pure profile ``(..., n_inf, A)``
    that is non-zero on ``player``'s infostates only.  Ties go to the lowest
    action index.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    x1, x2 = terminal_reach(st, sigma)
    cu = chance * util
    if player == 1:
        q, E, e0 = cu * x2, st.E1, st.e1_0
    else:
        q, E, e0 = -(cu * x1), st.E2, st.e2_0
    own = st.player_mask[player][:, 0]
    direct = q @ E
    penalty = ad.MASK_OFFSET * (1.0 - st.mask)
    v = direct
    for _ in range(st.depth):
        best = (_grid(st, v) - penalty).max(axis=-1) * own
        v = direct + best @ st.par_inf
    grid = _grid(st, v) - penalty
    best = grid.max(axis=-1) * own
    values = (best * st.root_inf).sum(axis=-1) + (q * e0).sum(axis=-1)
    choice = np.argmax(grid, axis=-1)
    br = np.zeros(grid.shape)
    np.put_along_axis(br, choice[..., None], 1.0, axis=-1)
    br = br * own[:, None]
    return values, br


# ------------------------------------------------------- strategies & API ops


def uniform_strategy(g_or_st) -> np.ndarray:
    st = g_or_st.structure if isinstance(g_or_st, GameTree) else g_or_st
    return st.mask / st.mask.sum(axis=-1, keepdims=True)


def strategy_array(g: GameTree, sigma, players=(1, 2)) -> np.ndarray:
    """Padded ``(n_inf, A)`` array from a behavioural strategy.

    ``sigma`` may be an array, a mapping ``infostate -> probabilities`` or a
    pair of such mappings (one per player).  Every infostate of ``players``
    must be covered and every vector must lie in the simplex.
    """
    st = g.structure
    if isinstance(sigma, tuple) and len(sigma) == 2 and not isinstance(sigma[0], (int, float)):
        merged = {}
        for part in sigma:
            if isinstance(part, np.ndarray):
                part = {s: part[s, : g.infostate_actions[s]] for s in range(g.num_infostates)
                        if np.any(part[s])}
            merged.update(part)
        sigma = merged
    if isinstance(sigma, np.ndarray):
        out = np.array(sigma, dtype=np.float64).reshape(st.n_inf, st.A)
        if np.any(np.isnan(out)):
            raise ValueError("strategy contains NaN")
        return out * st.mask
    out = np.zeros((st.n_inf, st.A))
    for s in range(g.num_infostates):
        if g.infostate_player[s] not in players:
            if s in sigma:
                out[s, : g.infostate_actions[s]] = sigma[s]
            continue
        if s not in sigma:
            raise KeyError(f"strategy does not cover infostate {s}")
        vec = np.asarray(sigma[s], dtype=np.float64)
        if vec.shape != (g.infostate_actions[s],):
            raise ValueError(f"infostate {s}: expected {g.infostate_actions[s]} probabilities")
        if np.any(vec < -1e-12) or abs(vec.sum() - 1.0) > 1e-9:
            raise ValueError(f"infostate {s}: not a probability vector")
        out[s, : len(vec)] = vec
    return out


def strategy_dict(g: GameTree, sigma, player=None) -> dict:
    sigma = np.asarray(sigma)
    return {s: sigma[s, : g.infostate_actions[s]].copy() for s in g.infostates(player)}


def expected_utility(g: GameTree, sigma) -> float:
    """Player-1 expected utility ``u1(sigma)``; player 2 receives ``-u1``."""
    st = g.structure
    return float(expected_value(st, st.chance, st.util, strategy_array(g, sigma)))


def counterfactual_rewards(g: GameTree, sigma, s: int) -> np.ndarray:
    if not 0 <= s < g.num_infostates:
        raise KeyError(f"unknown infostate {s}")
    st = g.structure
    cfv = counterfactual_values(st, st.chance, st.util, strategy_array(g, sigma))
    return cfv[s, : g.infostate_actions[s]].copy()


def encode_infostate(g: GameTree, s: int) -> np.ndarray:
    return g.features[s].copy()


def pure_strategies(g: GameTree, player: int, limit=10**6):
    """All pure strategies of ``player`` as padded profiles (own rows only)."""
    ids = g.infostates(player)
    count = int(np.prod([g.infostate_actions[s] for s in ids], dtype=np.float64))
    if count > limit:
        raise GameError(f"{count} pure strategies exceed the enumeration limit {limit}")
    st = g.structure
    out = np.zeros((count, st.n_inf, st.A))
    for k, choice in enumerate(product(*[range(g.infostate_actions[s]) for s in ids])):
        for s, a in zip(ids, choice):
            out[k, s, a] = 1.0
    return out


# -------------------------------------------------------------- game families


def matrix_game(matrix, family="matrix") -> GameTree:
    """Player 1 picks a row, player 2 (uninformed) a column; utility ``M[row, col]``."""
    M = np.asarray(matrix, dtype=np.float64)
    m, n = M.shape
    nodes = [None]
    row_children = []
    for a in range(m):
        idx = len(nodes)
        row_children.append(idx)
        nodes.append(None)
        leaves = []
        for b in range(n):
            leaves.append(len(nodes))
            nodes.append(terminal_node(M[a, b]))
        nodes[idx] = decision_node(2, 1, leaves)
    nodes[0] = decision_node(1, 0, row_children)
    return GameTree(nodes, 0, family, np.eye(2), matrix=M, labels=["P1", "P2"])


def rock_paper_scissors(X=0.0, Y=0.0) -> GameTree:
    M = [[0.0, -1.0, 3.0 + X], [1.0, Y, -1.0], [-1.0, 1.0, 0.0]]
    return matrix_game(M, "rock_paper_scissors")


def matching_pennies() -> GameTree:
    return matrix_game([[1.0, -1.0], [-1.0, 1.0]], "matching_pennies")


KUHN_DEALS = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
KUHN_CARDS = "JQK"


def kuhn_poker(ante=1.0, deal_weights=None) -> GameTree:
    """Three-card Kuhn poker with bet size 1.

    ``deal_weights`` (six non-negative numbers over :data:`KUHN_DEALS`) sets
    the chance distribution over private cards; it is dealt in two stages, so
    the tree has a root chance node plus one chance node per first card.
    """
    w = np.full(6, 1 / 6) if deal_weights is None else np.asarray(deal_weights, dtype=np.float64)
    w = w / w.sum()
    nodes: list = []
    ids: dict = {}
    labels: list = []
    feats: list = []

    def info(player, card, hist):
        key = (player, card, hist)
        if key not in ids:
            ids[key] = len(ids)
            labels.append(f"P{player}:{KUHN_CARDS[card]}:{hist or '-'}")
            bits = {"": (0, 0), "c": (0, 1), "b": (1, 0), "cb": (1, 1)}[hist]
            feats.append([player == 1, player == 2] + [card == c for c in range(3)] + list(bits))
        return ids[key]

    def add(node_fn):
        nodes.append(None)
        idx = len(nodes) - 1
        nodes[idx] = node_fn()
        return idx

    def showdown(c1, c2, stake):
        return stake if c1 > c2 else -stake

    def build(c1, c2, hist):
        idx = len(nodes)
        nodes.append(None)
        if hist == "":
            s = info(1, c1, hist)
            kids = [build(c1, c2, "c"), build(c1, c2, "b")]
            nodes[idx] = decision_node(1, s, kids)
        elif hist == "c":
            s = info(2, c2, hist)
            kids = [add(lambda: terminal_node(showdown(c1, c2, ante))), build(c1, c2, "cb")]
            nodes[idx] = decision_node(2, s, kids)
        elif hist == "b":
            s = info(2, c2, hist)
            kids = [add(lambda: terminal_node(ante)), add(lambda: terminal_node(showdown(c1, c2, ante + 1)))]
            nodes[idx] = decision_node(2, s, kids)
        elif hist == "cb":
            s = info(1, c1, hist)
            kids = [add(lambda: terminal_node(-ante)), add(lambda: terminal_node(showdown(c1, c2, ante + 1)))]
            nodes[idx] = decision_node(1, s, kids)
        return idx

    nodes.append(None)
    first_children = []
    first_probs = []
    for c1 in range(3):
        deals = [k for k, (a, _) in enumerate(KUHN_DEALS) if a == c1]
        marginal = w[deals].sum()
        first_probs.append(marginal)
        idx = len(nodes)
        nodes.append(None)
        first_children.append(idx)
        kids = [build(c1, KUHN_DEALS[k][1], "") for k in deals]
        cond = w[deals] / marginal if marginal > 0 else np.full(len(deals), 1 / len(deals))
        cond = cond / cond.sum()
        nodes[idx] = chance_node(cond, kids)
    first_probs = np.asarray(first_probs)
    nodes[0] = chance_node(first_probs / first_probs.sum(), first_children)
    return GameTree(nodes, 0, "kuhn_poker", np.array(feats, dtype=np.float64), labels=labels)


@dataclass(frozen=True)
class GameDistribution:
    """A seeded family of games; ``sample_game(dist, k)`` is pure in ``(seed, k)``."""

    family: str
    seed: int = 0
    params: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GameError(f"unknown game family {self.family!r}")


def sample_game(dist: GameDistribution, index: int) -> GameTree:
    if index < 0:
        raise ValueError("index must be >= 0")
    rng = rng_mod.stream(dist.seed, f"game/{dist.family}", index)
    p = dist.params
    if dist.family == "rock_paper_scissors":
        X, Y = rng.uniform(-1.0, 1.0, size=2)
        return rock_paper_scissors(X, Y)
    if dist.family == "uniform_matrix_game":
        n = int(p.get("size", 3))
        return matrix_game(rng.uniform(-1.0, 1.0, size=(n, n)), "uniform_matrix_game")
    if dist.family == "matching_pennies":
        return matching_pennies()
    if dist.family == "kuhn_poker":
        if not p.get("perturb", True):
            return kuhn_poker()
        lo, hi = p.get("ante_range", (0.75, 1.25))
        ante = rng.uniform(lo, hi)
        weights = rng.dirichlet(np.full(6, float(p.get("dirichlet_alpha", 10.0))))
        return kuhn_poker(ante, weights)
    raise GameError(f"unknown game family {dist.family!r}")


def sample_games(dist: GameDistribution, count: int, start: int = 0) -> list:
    return [sample_game(dist, start + k) for k in range(count)]
