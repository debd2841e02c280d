"""Decoy-state BB84 key rates with polarization-dependent loss."""

from .asymptotic import RateInputs, heuristic_p_optimal, key_rate_asymptotic, solve_optimal_mu
from .config import ConfigError, ScenarioConfig
from .decoy import decoy_bounds, key_rate_two_decoy, y1_deviation
from .finite import FiniteKeyParams, finite_key_rate
from .model import ChannelGeometry, Polarization, Setting, SourceModel, SystemParams, forward_observables
from .montecarlo import simulate_counts
from .optimizer import optimize_rate, sweep

__version__ = "0.1.0"
