"""Equilibrium oracles, regret replay and the locally-optimal-strategy theory."""

from .lp import LPError, lp_nash, sequence_form_nash, simplex
from .replay import external_regret_replay
from .theory import (
    FiniteDistribution,
    RestrictedDistribution,
    expected_exploitability_curve,
    last_iterate_driver,
    locally_optimal,
    restrict,
)
