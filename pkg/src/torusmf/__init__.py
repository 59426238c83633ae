"""Variational toolkit for Monge-Ampere mean-field equations on the flat
2-torus at complex dimension one."""

from .alpha_mt import (AlphaReport, CoercivityReport, MTReport, alpha_estimate,
                       coercivity_probe, frostman_exponent, klt_measure,
                       mt_constant_fit, mt_sharpness_witness, threshold_trend)
from .envelope import EnvelopeResult, envelope_zero, orthogonality_residual, psh_project
from .errors import (DivergentIntegral, KltViolation, LcpNonConvergence,
                     NonZeroMeanRHS, NotPsh, TorusMFError)
from .functionals import (FunctionalReport, SolverParams, aubin_I, aubin_J,
                          ding_G, duality_gap, energy_E, entropy_D,
                          free_energy_F, functional_report, log_moment_L,
                          ma_measure, mabuchi_K, measure_energy,
                          potential_of_measure, slack)
from .grid import (BackgroundForm, GridSpec, dirichlet, green_function,
                   laplacian, poisson_solve)
from .mean_field import (SolveResult, beta_infinity_sweep, measure_descent,
                         residual, solve)
from .measures import (Measure, SingularField, exp_integral, from_density,
                       green_pole, integrate, lebesgue)

__version__ = "0.1.0"
