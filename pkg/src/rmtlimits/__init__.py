"""Limiting eigenvalue distributions of random matrix ensembles.

Closed-form limit laws and functional-equation solvers, seeded ensemble
samplers, free additive convolution, equilibrium measures of invariant
ensembles and Monte Carlo convergence experiments.
"""
__version__ = "0.1.0"

from .config import DEFAULT_CONFIG, SolverConfig
from .errors import (
    ConvergenceError,
    DegenerateTransformError,
    InputError,
    NumericalError,
    PoleError,
    RMTError,
    SpectralParameterError,
)
from .measures import *  # noqa: F401,F403
from .limit_laws import *  # noqa: F401,F403
from .ensembles import *  # noqa: F401,F403
from .equilibrium import *  # noqa: F401,F403
from .free_conv import *  # noqa: F401,F403
from .experiments import *  # noqa: F401,F403
from .config_io import *  # noqa: F401,F403
from . import measures, limit_laws, ensembles, equilibrium, free_conv, experiments, config_io

__all__ = (
    ["__version__", "DEFAULT_CONFIG", "SolverConfig", "RMTError", "InputError", "SpectralParameterError",
     "NumericalError", "ConvergenceError", "PoleError", "DegenerateTransformError"]
    + measures.__all__ + limit_laws.__all__ + ensembles.__all__ + equilibrium.__all__
    + free_conv.__all__ + experiments.__all__ + config_io.__all__
)
