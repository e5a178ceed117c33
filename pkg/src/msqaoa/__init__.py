"""Depth-1 QAOA energy per spin on mixed-spin Sherrington-Kirkpatrick models.

Pieces: infinite-size closed forms (``closed_form``), exact finite-n
disorder-averaged moments via sketch sums with a brute-force oracle
(``finite_n``), per-instance statevector simulation (``simulator``), angle
optimization (``optimizer``), and a CLI (``msqaoa``).
"""

from .closed_form import (
    Angles,
    d3_stationarity_residuals,
    energy_higher_moment_limit,
    energy_mixture_form,
    energy_pure_d,
    energy_sigma_form,
)
from .finite_n import (
    MomentReport,
    QFactors,
    Sketch,
    f_q,
    f_q_abc,
    g_q,
    generating_function,
    oracle_mgf,
    oracle_moments,
    sketch_moments,
    t_sum,
)
from .model import (
    MixtureFunction,
    MixtureSpec,
    ProblemInstance,
    cost,
    estimate_spec,
    from_mixture_function,
    make_mixture_spec,
    read_instance,
    sample_instance,
    write_instance,
)
from .optimizer import (
    Optimum,
    SearchConfig,
    approximation_factor,
    optimal_angle_curve,
    optimize_closed_form,
    pure_d_spec,
)
from .simulator import build_phase_table, expectation, landscape_instance, qaoa_state

__version__ = "0.1.0"

__all__ = [
    "Angles",
    "MixtureFunction",
    "MixtureSpec",
    "MomentReport",
    "Optimum",
    "ProblemInstance",
    "QFactors",
    "SearchConfig",
    "Sketch",
    "__version__",
    "approximation_factor",
    "build_phase_table",
    "cost",
    "d3_stationarity_residuals",
    "energy_higher_moment_limit",
    "energy_mixture_form",
    "energy_pure_d",
    "energy_sigma_form",
    "estimate_spec",
    "expectation",
    "f_q",
    "f_q_abc",
    "from_mixture_function",
    "g_q",
    "generating_function",
    "landscape_instance",
    "make_mixture_spec",
    "optimal_angle_curve",
    "optimize_closed_form",
    "oracle_mgf",
    "oracle_moments",
    "pure_d_spec",
    "qaoa_state",
    "read_instance",
    "sample_instance",
    "sketch_moments",
    "t_sum",
    "write_instance",
]
