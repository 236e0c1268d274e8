"""mme: exact 1/N^2 expansions of perturbed-Gaussian multi-matrix models.

Symbolic pipeline (exact rationals end to end):

* :mod:`mme.expalg`    -- exponential polynomials in time variables and their
  ordered-domain integrals;
* :mod:`mme.ncpoly`    -- indexed non-commutative polynomials, label universes
  and derivatives;
* :mod:`mme.freewick`  -- interpolated semicircular covariances and the
  non-crossing Wick trace;
* :mod:`mme.master`    -- the interpolation operators, expansion coefficients
  alpha_n(lambda, P), free energy and free entropy;
* :mod:`mme.gausswick` -- the finite-N pairing oracle, genus extraction and
  colored map counts;
* :mod:`mme.sampler`   -- Metropolis-adjusted Langevin sampling of the cut-off
  matrix model for numeric validation;
* :mod:`mme.cli`       -- command-line front end.
"""

from .expalg import DivergentIntegral, DomainSpec, ExpPoly
from .master import (BudgetExceeded, LambdaSeries, Potential, SelfAdjointError,
                     alpha_eval, alpha_series, base_observable, free_energy_series,
                     free_entropy)
from .ncpoly import History, NCPoly, UnknownLabel

__all__ = [
    "DivergentIntegral", "DomainSpec", "ExpPoly",
    "BudgetExceeded", "LambdaSeries", "Potential", "SelfAdjointError",
    "alpha_eval", "alpha_series", "base_observable", "free_energy_series",
    "free_entropy", "History", "NCPoly", "UnknownLabel",
]
