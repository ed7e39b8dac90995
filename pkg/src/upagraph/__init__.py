"""Uniform-preferential attachment (UPA) random graphs.

Simulation of the growth process, exact expected degree counts, the limiting
degree distribution and the statistical checks that connect them.
"""

__version__ = "0.1.0"

from .errors import DomainError, UPAError, ValidationError
from .model import (
    DegreeHistogram,
    Fixed,
    GraphState,
    Linear,
    ModelParams,
    degree_histogram,
    grow,
    init_graph,
    make_rng,
    simulate,
    step,
)
from .expectation import (
    ExpectedCountTable,
    WindowDegreeMatrix,
    expected_counts,
    expected_counts_l1,
    expected_counts_window,
    monte_carlo_expected_counts,
    window_degree_evolution,
)
from .asymptotics import (
    DegreeDistribution,
    limit_H,
    limit_distribution,
    limit_pk,
    limit_pk_l1,
    power_law_exponent,
    tail_approx,
)
from .analysis import (
    EnsembleResult,
    TailFit,
    concentration_check,
    empirical_distribution,
    fit_tail_slope,
    linear_window_study,
    run_ensemble,
    sup_distance,
)
