"""Dense two-phase simplex and the equilibrium LPs built on it.

The solver is a textbook tableau method with Bland's anti-cycling rule.  It
is meant for the small programs that certify equilibria of desk-scale games,
not for speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import games as G


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


PIVOT_TOL = 1e-9


def _run(T, basis, ncols, tol, max_iter):
    """Minimise the objective row of ``T`` over the first ``ncols`` columns."""
    m = T.shape[0] - 1
    it = 0
    while True:
        cost = T[m, :ncols]
        entering = np.flatnonzero(cost < -tol)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:m, col]
        ratios = np.full(m, np.inf)
        pos = column > PIVOT_TOL
        ratios[pos] = T[:m, -1][pos] / column[pos]
        if not np.isfinite(ratios).any():
            raise LPError("linear program is unbounded")
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise LPError("simplex iteration limit reached")


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=(), tol=1e-11, max_iter=50_000):
    """Minimise ``c @ x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    Variables listed in ``free`` are unrestricted in sign (split internally).
    """
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=np.float64))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=np.float64))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).ravel()
    free = sorted(set(int(k) for k in free))

    # columns: x (n), negative parts of free vars, slacks
    neg = np.zeros((n, len(free)))
    for j, k in enumerate(free):
        neg[k, j] = -1.0
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    A = np.block([
        [A_ub, A_ub @ neg, np.eye(m_ub)],
        [A_eq, A_eq @ neg, np.zeros((m_eq, m_ub))],
    ]) if m_ub + m_eq else np.zeros((0, n + len(free)))
    b = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c, c @ neg, np.zeros(m_ub)])
    m, N = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :N] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(N, N + m))
    it = _run(T, basis, N + m, tol, max_iter)
    if -T[m, -1] > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise LPError("linear program is infeasible")

    # drive artificials out of the basis; rows that cannot pivot are redundant
    keep = []
    for i in range(m):
        if basis[i] >= N:
            cand = np.flatnonzero(np.abs(T[i, :N]) > 1e-9)
            if cand.size:
                _pivot(T, i, int(cand[0]))
                basis[i] = int(cand[0])
                keep.append(i)
        else:
            keep.append(i)
    T = np.vstack([T[keep][:, list(range(N)) + [-1]], np.zeros((1, N + 1))])
    basis = [basis[i] for i in keep]
    mk = len(keep)
    cb = cost[basis]
    T[mk, :N] = cost - cb @ T[:mk, :N]
    T[mk, -1] = -cb @ T[:mk, -1]
    it += _run(T, basis, N, tol, max_iter)

    z = np.zeros(N)
    z[basis] = T[:mk, -1]
    x = z[:n].copy()
    for j, k in enumerate(free):
        x[k] -= z[n + j]
    scale = max(1.0, np.abs(b).max(initial=0.0))
    viol = max((A_ub @ x - b_ub).max(initial=0.0), np.abs(A_eq @ x - b_eq).max(initial=0.0))
    if viol > 1e-7 * scale:
        raise LPError(f"simplex lost feasibility (violation {viol:.2e})")
    return LPResult(x, float(c @ x), it)


# ----------------------------------------------------------- matrix games


def lp_nash(M):
    """Equilibrium ``((sigma1, sigma2), value)`` of the zero-sum game ``M``.

    Player 1 picks rows and maximises ``sigma1 @ M @ sigma2``.
    """
    M = np.asarray(M, dtype=np.float64)
    m, n = M.shape
    # player 1: max v s.t. M^T s >= v, sum s = 1
    c = np.zeros(m + 1)
    c[m] = -1.0
    res1 = simplex(c, np.hstack([-M.T, np.ones((n, 1))]), np.zeros(n),
                   np.hstack([np.ones((1, m)), np.zeros((1, 1))]), [1.0], free=[m])
    # player 2: min w s.t. M s <= w, sum s = 1
    c = np.zeros(n + 1)
    c[n] = 1.0
    res2 = simplex(c, np.hstack([M, -np.ones((m, 1))]), np.zeros(m),
                   np.hstack([np.ones((1, n)), np.zeros((1, 1))]), [1.0], free=[n])
    s1 = _clean_simplex(res1.x[:m])
    s2 = _clean_simplex(res2.x[:n])
    return (s1, s2), float(res1.x[m])


def _clean_simplex(v):
    v = np.maximum(v, 0.0)
    return v / v.sum()


# ------------------------------------------------------------ sequence form


def _sequences(st: G.TreeStructure, player: int):
    """Flat indices of ``player``'s sequences, the empty sequence first (``-1``)."""
    rows = np.flatnonzero(st.player == player)
    seqs = [-1] + [s * st.A + a for s in rows for a in range(st.A) if st.mask[s, a]]
    return seqs, {k: j for j, k in enumerate(seqs)}


def _constraints(st: G.TreeStructure, player: int, seqs, index):
    rows = np.flatnonzero(st.player == player)
    E = np.zeros((1 + rows.size, len(seqs)))
    E[0, 0] = 1.0
    for r, s in enumerate(rows, start=1):
        parent = np.flatnonzero(st.par_inf[s])
        E[r, index[int(parent[0])] if parent.size else 0] = -1.0
        for a in range(st.A):
            if st.mask[s, a]:
                E[r, index[s * st.A + a]] = 1.0
    e = np.zeros(1 + rows.size)
    e[0] = 1.0
    return E, e


def _terminal_seq(E, index):
    """Column of each terminal's last own sequence (0 for the empty sequence)."""
    out = []
    for j in range(E.shape[0]):
        k = np.flatnonzero(E[j])
        out.append(index[int(k[0])] if k.size else 0)
    return out


def sequence_form_payoff(g: G.GameTree):
    st = g.structure
    s1, i1 = _sequences(st, 1)
    s2, i2 = _sequences(st, 2)
    A = np.zeros((len(s1), len(s2)))
    z1 = _terminal_seq(st.E1, i1)
    z2 = _terminal_seq(st.E2, i2)
    for j in range(st.n_term):
        A[z1[j], z2[j]] += st.chance[j] * st.util[j]
    return A, (s1, i1), (s2, i2)


def _behavioural(st: G.TreeStructure, player, x, seqs, index):
    sigma = np.zeros((st.n_inf, st.A))
    for s in np.flatnonzero(st.player == player):
        parent = np.flatnonzero(st.par_inf[s])
        px = x[index[int(parent[0])]] if parent.size else 1.0
        legal = np.flatnonzero(st.mask[s])
        vals = np.array([max(x[index[s * st.A + a]], 0.0) for a in legal])
        if px > 1e-12 and vals.sum() > 0:
            sigma[s, legal] = vals / vals.sum()
        else:
            sigma[s, legal] = 1.0 / legal.size
    return sigma


def sequence_form_nash(g: G.GameTree):
    """Equilibrium profile (padded ``(n_inf, A)`` array) and player-1 value.

    Solves the sequence-form LP once per player and converts the realization
    plans back to behavioural strategies (uniform where a plan is unreached).
    """
    st = g.structure
    A, (s1, i1), (s2, i2) = sequence_form_payoff(g)
    E, e = _constraints(st, 1, s1, i1)
    F, f = _constraints(st, 2, s2, i2)
    n1, n2 = len(s1), len(s2)
    mE, mF = E.shape[0], F.shape[0]
    # player 1: max f.q  s.t. F^T q - A^T x <= 0, E x = e, x >= 0, q free
    c = np.concatenate([np.zeros(n1), -f])
    res1 = simplex(c, np.hstack([-A.T, F.T]), np.zeros(n2),
                   np.hstack([E, np.zeros((mE, mF))]), e, free=range(n1, n1 + mF))
    # player 2: min e.p  s.t. A y - E^T p <= 0, F y = f, y >= 0, p free
    c = np.concatenate([np.zeros(n2), e])
    res2 = simplex(c, np.hstack([A, -E.T]), np.zeros(n1),
                   np.hstack([F, np.zeros((mF, mE))]), f, free=range(n2, n2 + mE))
    sigma = _behavioural(st, 1, res1.x[:n1], s1, i1) + _behavioural(st, 2, res2.x[:n2], s2, i2)
    return sigma, -res1.objective
