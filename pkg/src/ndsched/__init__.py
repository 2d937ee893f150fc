"""Multi-channel passive neighbor discovery: schedule synthesis, exact optimization and simulation."""

from .families import FamilyTag, classify, gcd_normalize, sample_f1, sample_f2, sample_f3
from .mdtopt import brute_force_oracle, build_ilp, optimal_mdt, solve_exact
from .model import (
    BpSet,
    ConfigProbabilityMap,
    Configuration,
    IncompleteScheduleError,
    InvalidScenarioError,
    ListeningSchedule,
    MetricsReport,
    active_configs,
    channel_switches,
    compute_metrics,
    discovery_time,
    enumerate_configurations,
    is_complete,
    is_recursive,
    uniform_probabilities,
)
from .rng import DrawStream, derive_seed
from .schedulers import TiebreakerRule, chan_train, disc_probs, greedy, opt_b2, psv
from .sim import NeighborInstance, PhyParams, TrialOutcome, generate_neighbors, run_trial, success_rate

__version__ = "0.1.0"
