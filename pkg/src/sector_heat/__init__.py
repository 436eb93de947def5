"""Absorbing semilinear heat flow u_t - Delta u + |u|^alpha u = 0 on the sector
{x_1 > 0, ..., x_m > 0} of R^N, with singular data in a weighted sup-norm space."""
from .domain import AxisKind, DomainSpec, Field, SectorGrid, antisym_extend, interpolate, reflect
from .exceptions import (ConfigError, DomainError, GridCoverageError, NumericalError,
                         RegimeError, SectorHeatError)
from .heat_kernel import apply_semigroup, erf_product, kernel, kernel_domination_check
from .report import VerificationReport
from .solver import (Exponential, PowerLaw, SolverConfig, Trajectory, absorption_flow, solve,
                     solve_rn, universal_bound)
from .weighted_space import (AbsDifference, AntisymConstant, GammaPrimeTail, LogPeriodicPsi0,
                             ProfileSpec, Psi0, Sampled, TruncatedPsi0, c_const, dilate, psi0,
                             spacetime_rescale, weight, xnorm)

__version__ = "0.1.0"
