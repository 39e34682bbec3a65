"""Numerics for the perturbed Painleve II equation y'' = 2y^3 + x^mu y.

Modules
-------
specfun           generalized Airy pair f, g built from modified Bessel functions
series            Boutroux-variable coefficients and the formal series y_f
ode               adaptive DOPRI5 integration along segments in C, pole detection
connection        decaying solutions, bisection for the Hastings-McLeod constant
tritronquee       tritronquee fans, rotation symmetry, Stokes gap
electrodiffusion  two-ion electro-diffusion model and its reduction to mu = 2
"""
from ._jit import NUMBA_ENABLED
from .errors import (DomainError, NoSolutionError, NotReducibleError, NumericalFailure,
                     P2muError)
from .specfun import ProblemSpec, gen_airy, modified_bessel

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "DomainError", "NoSolutionError", "NotReducibleError", "NumericalFailure",
    "P2muError", "ProblemSpec", "gen_airy", "modified_bessel", "__version__",
]
