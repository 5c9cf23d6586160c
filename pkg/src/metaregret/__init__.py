"""CFR solvers and meta-learned regret minimizers for two-player zero-sum games."""

from . import games, regret
from .cfr import SelfPlay, best_response, exploitability, solve
from .games import GameTree, kuhn_poker, matching_pennies, matrix_game, rock_paper_scissors

__all__ = [
    "GameTree",
    "SelfPlay",
    "best_response",
    "exploitability",
    "games",
    "kuhn_poker",
    "matching_pennies",
    "matrix_game",
    "regret",
    "rock_paper_scissors",
    "solve",
]
