"""Distributed-order fractional differential equations on graphs.

Building blocks:

* :mod:`dofde.special` -- gamma/binomial kernels, waiting-time normalizers,
  a Mittag-Leffler oracle, and a numerical long-memory derivative.
* :mod:`dofde.measure` -- measures over derivative orders and their
  multi-term (quadrature) discretization.
* :mod:`dofde.solvers` -- the two multi-term FDE solution strategies
  (chain conversion + fractional predictor, and Grunwald-Letnikov iteration)
  plus empirical convergence-order estimation.
* :mod:`dofde.graph` -- graph model, random-walk Laplacian, linear diffusion.
* :mod:`dofde.walk` -- Monte-Carlo non-Markovian walker ensembles and
  waiting-time span fitting.
* :mod:`dofde.visco` -- viscoelastic toy-data generation and system
  identification over fractional-derivative features.
* :mod:`dofde.cli` -- the ``dofde`` command-line front end.
"""

from .errors import (
    DivergedError,
    DomainError,
    InputError,
    NumericError,
    UnsupportedOrderError,
)
from .measure import MultiTermSpec, OrderMeasure, dirac, discretize, normalize_mass
from .solvers import (
    FDEProblem,
    OrderEstimate,
    SystemSpec,
    Trajectory,
    abm_solve_single,
    convert_to_system,
    estimate_order,
    gl_solve,
    solve,
    solve_strategy1,
)
from .graph import DiffusionOperator, GraphSpec, build_operator, d_grand_rhs, solve_diffusion
from .walk import WalkConfig, WalkResult, fit_waiting_span, simulate, total_variation

__version__ = "0.1.0"

__all__ = [
    "DivergedError",
    "DomainError",
    "InputError",
    "NumericError",
    "UnsupportedOrderError",
    "MultiTermSpec",
    "OrderMeasure",
    "dirac",
    "discretize",
    "normalize_mass",
    "FDEProblem",
    "OrderEstimate",
    "SystemSpec",
    "Trajectory",
    "abm_solve_single",
    "convert_to_system",
    "estimate_order",
    "gl_solve",
    "solve",
    "solve_strategy1",
    "DiffusionOperator",
    "GraphSpec",
    "build_operator",
    "d_grand_rhs",
    "solve_diffusion",
    "WalkConfig",
    "WalkResult",
    "fit_waiting_span",
    "simulate",
    "total_variation",
    "__version__",
]
