"""Locally optimal strategies over finite distributions of matrix games.

A player facing an unknown game drawn from a finite prior can pick the
strategy minimising the expected best-response reward of the opponent.
Observing rewards rules out inconsistent games; repeating the choice on the
restricted prior gives the last-iterate dynamics studied here.

Throughout, the "size" of a reward vector is its largest element (not the
largest absolute value), matching the per-step regret term of the meta-loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .. import games as G
from .. import rng as rng_mod
from .lp import lp_nash, simplex

CONSISTENCY_TOL = 1e-9


@dataclass
class FiniteDistribution:
    matrices: list
    probs: np.ndarray

    def __post_init__(self):
        self.matrices = [np.asarray(m.matrix if isinstance(m, G.GameTree) else m, dtype=np.float64)
                         for m in self.matrices]
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if not self.matrices:
            raise ValueError("distribution needs at least one game")
        if len(self.probs) != len(self.matrices):
            raise ValueError("one probability per game")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be >= 0 and sum to 1")
        shape = self.matrices[0].shape
        if any(m.shape != shape for m in self.matrices):
            raise ValueError("all games must share their action-space shape")

    @classmethod
    def uniform(cls, matrices) -> "FiniteDistribution":
        return cls(list(matrices), np.full(len(matrices), 1.0 / len(matrices)))

    def __len__(self):
        return len(self.matrices)


@dataclass
class RestrictedDistribution:
    dist: FiniteDistribution
    support: list  # indices into dist.matrices still consistent with history
    history: list = field(default_factory=list)  # (sigma1, sigma2, x1, x2)

    @classmethod
    def of(cls, dist: FiniteDistribution) -> "RestrictedDistribution":
        return cls(dist, list(range(len(dist))))

    def as_distribution(self) -> FiniteDistribution:
        p = self.dist.probs[self.support]
        return FiniteDistribution([self.dist.matrices[k] for k in self.support], p / p.sum())


def rewards(M, sigma1, sigma2):
    """Per-action rewards ``(M sigma2, -M^T sigma1)`` of both players."""
    M = np.asarray(M)
    return M @ sigma2, -M.T @ sigma1


def matrix_exploitability(M, sigma1, sigma2) -> float:
    x1, x2 = rewards(M, sigma1, sigma2)
    return 0.5 * float(x1.max() + x2.max())


def _side_matrices(dist: FiniteDistribution, player: int):
    """Per game, the matrix mapping ``player``'s strategy to opponent rewards."""
    if player == 1:
        return [-M.T for M in dist.matrices]
    return list(dist.matrices)


def expected_max_reward(dist: FiniteDistribution, player: int, sigma) -> float:
    return float(sum(p * (Ag @ sigma).max() for p, Ag in zip(dist.probs, _side_matrices(dist, player))))


def _one_side(dist: FiniteDistribution, player: int):
    mats = _side_matrices(dist, player)
    k = len(mats)
    rows, n = mats[0].shape
    # variables: sigma (n), t_g (k, free); min sum p_g t_g s.t. A_g sigma <= t_g
    c = np.concatenate([np.zeros(n), dist.probs])
    A_ub = np.zeros((k * rows, n + k))
    for g, Ag in enumerate(mats):
        A_ub[g * rows : (g + 1) * rows, :n] = Ag
        A_ub[g * rows : (g + 1) * rows, n + g] = -1.0
    A_eq = np.concatenate([np.ones(n), np.zeros(k)])[None]
    res = simplex(c, A_ub, np.zeros(k * rows), A_eq, [1.0], free=range(n, n + k))
    best = res.objective
    sigma = np.maximum(res.x[:n], 0.0)
    sigma /= sigma.sum()

    # among optimal strategies prefer the one of least Euclidean norm
    cons = [
        {"type": "eq", "fun": lambda z: z[:n].sum() - 1.0},
        {"type": "ineq", "fun": lambda z: best + 1e-10 - dist.probs @ z[n:]},
        {"type": "ineq", "fun": lambda z: -(A_ub @ z)},
    ]
    z0 = np.concatenate([sigma, res.x[n:]])
    out = minimize(lambda z: z[:n] @ z[:n], z0, jac=lambda z: np.concatenate([2 * z[:n], np.zeros(k)]),
                   method="SLSQP", constraints=cons, bounds=[(0, None)] * n + [(None, None)] * k,
                   options={"ftol": 1e-15, "maxiter": 500})
    if out.success:
        cand = np.maximum(out.x[:n], 0.0)
        cand /= cand.sum()
        if expected_max_reward(dist, player, cand) <= best + 1e-9:
            sigma = cand
    return sigma, expected_max_reward(dist, player, sigma)


def locally_optimal(dist) -> tuple:
    """Locally optimal strategies ``(sigma1, sigma2)`` for a finite prior."""
    if isinstance(dist, RestrictedDistribution):
        dist = dist.as_distribution()
    s1, _ = _one_side(dist, 1)
    s2, _ = _one_side(dist, 2)
    return s1, s2


def restrict(rd: RestrictedDistribution, sigma, observed, tol=CONSISTENCY_TOL) -> RestrictedDistribution:
    """Drop every game whose rewards under ``sigma`` differ from ``observed``."""
    sigma1, sigma2 = sigma
    x1, x2 = observed
    keep = []
    for k in rd.support:
        y1, y2 = rewards(rd.dist.matrices[k], sigma1, sigma2)
        if np.abs(y1 - x1).max() <= tol and np.abs(y2 - x2).max() <= tol:
            keep.append(k)
    if not keep:
        raise ValueError("no game in the support is consistent with the observed rewards")
    return RestrictedDistribution(rd.dist, keep, rd.history + [(sigma1, sigma2, x1, x2)])


@dataclass
class LastIterateStep:
    t: int
    support_size: int
    expl: float
    sigma1: np.ndarray
    sigma2: np.ndarray


def last_iterate_driver(dist: FiniteDistribution, max_steps: int, true_index: int = 0) -> list:
    """Play locally optimal strategies of the restricted prior against a hidden game.

    ``support_size`` is logged before the step's observation is used.
    """
    rd = RestrictedDistribution.of(dist)
    M = dist.matrices[true_index]
    log = []
    for t in range(1, max_steps + 1):
        s1, s2 = locally_optimal(rd)
        log.append(LastIterateStep(t, len(rd.support), matrix_exploitability(M, s1, s2), s1, s2))
        rd = restrict(rd, (s1, s2), rewards(M, s1, s2))
    return log


def expected_exploitability_curve(dist: FiniteDistribution, max_steps: int) -> np.ndarray:
    """Prior-weighted exploitability per step, the hidden game drawn from the prior."""
    curve = np.zeros(max_steps)
    for k, p in enumerate(dist.probs):
        curve += p * np.array([s.expl for s in last_iterate_driver(dist, max_steps, k)])
    return curve


def one_sided_equilibria(dist: FiniteDistribution):
    """Per game, the equilibrium strategies ``(sigma1, sigma2)`` from the LP oracle."""
    return [lp_nash(M)[0] for M in dist.matrices]


def in_convex_hull(point, vertices, tol=1e-7) -> bool:
    """Whether ``point`` is a convex combination of ``vertices`` (feasibility LP)."""
    V = np.asarray(vertices, dtype=np.float64)
    k = V.shape[0]
    # slack-augmented feasibility: min sum(u+v) s.t. V^T l + u - v = point, sum l = 1
    d = V.shape[1]
    c = np.concatenate([np.zeros(k), np.ones(2 * d)])
    A_eq = np.vstack([np.hstack([V.T, np.eye(d), -np.eye(d)]),
                      np.concatenate([np.ones(k), np.zeros(2 * d)])[None]])
    b_eq = np.concatenate([np.asarray(point, dtype=np.float64), [1.0]])
    return simplex(c, A_eq=A_eq, b_eq=b_eq).objective <= tol


def random_ensemble(seed: int, index: int, max_games=5, sizes=(2, 3)) -> FiniteDistribution:
    """Random prior over ``k <= max_games`` matrix games with Dirichlet weights.

    Entries are continuous, so two games produce equal rewards under a common
    profile with probability zero (pairwise distinguishable).
    """
    rng = rng_mod.stream(seed, "analysis/ensemble", index)
    k = int(rng.integers(1, max_games + 1))
    n = int(rng.choice(sizes))
    m = int(rng.choice(sizes))
    mats = [rng.uniform(-1.0, 1.0, (n, m)) for _ in range(k)]
    return FiniteDistribution(mats, rng.dirichlet(np.ones(k)))


MATRIX_ENSEMBLE_EXAMPLE = [
    [[1.0, 0.0], [1.0, 0.0]],
    [[1.0, 0.0], [0.0, 1.0]],
    [[0.0, 1.0], [0.0, 1.0]],
]

INDISTINGUISHABLE_PAIR = [
    [[1.0, 0.0], [0.0, 1.0]],
    [[0.0, 1.0], [1.0, 0.0]],
]
