"""Product measures, stationarity and ergodicity for conservative particle systems."""
from .errors import *  # noqa: F401,F403
from .model import (
    Configuration,
    FugacityProfile,
    Kernel,
    OccupancyRange,
    RateFunction,
    constant_zero_range,
    custom_rate,
    exclusion,
    inverse_even_factorial,
    linear_zero_range,
    misanthrope,
    partial_exclusion,
    table_rate,
    zero_range,
)
from .measures import DiscreteLaw, ProductMeasure, check_assumptions, marginal, product_measure, radius, rn_move_derivative
from .stationarity import FiniteSystem, LocalFunction, generator_expectation, stationarity_verdict
from .ergodicity import Verdict, countable_w_criterion, finite_w_criterion, gcd_bezout, star_star_check
from .coupling import coupling_times, mineka_joint_step, propagate, simulate_coupling, tail_triviality_probe, tv_distance
from .dynamics import gillespie_run, stationarity_mc
from .duality import dual_fugacity, dualize
from .counterexample import build_counterexample, nontriviality_certificate
from .descriptors import System, load_system

__version__ = "0.1.0"
