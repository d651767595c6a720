"""Exact nonequilibrium steady states of boundary-driven dissipative XXZ chains.

A coherently driven, boundary-damped XXZ spin chain has an exactly solvable
steady state built from tridiagonal bond-space recursions.  This package
computes that solution and its observables at large N, maps it onto a
classical lazy walk in a quasiperiodic environment to extract the drive
transition and its exponents, and validates everything against a dense
Lindblad solver at small N.
"""

from .errors import (CapacityError, DegenerateDriveError, GaugeError,
                     NumericalError, UnsupportedRegimeError, ValidationError,
                     XxzError)
from .model import (DerivedParams, ModelParams, SpecialPoint, derive,
                    detect_special_point, nearest_special_points)
from .mps import (CholeskyFactor, DoubledState, MpsCoefficients,
                  analytic_coefficients, apply_gauge, build_cholesky,
                  build_doubled_state, solve_coefficients, solve_incoherent,
                  weak_dissipation_alpha)
from .observables import (NessObservables, TransferChain, build_transfer_chain,
                          current, entanglement_entropy, magnetization,
                          observables_vs_drive, observables_vs_size,
                          transfer_propagate, zz_correlation)
from .oracle import (DenseLindblad, SteadyState, build_liouvillian,
                     onsager_operator_pair, steady_state, trace_distance,
                     two_time_correlator)
from .walk import (FreeEnergyProfile, MonteCarloResult, ScalingFit,
                   WalkEnvironment, classical_propagate, collapse_exponents,
                   condensation_magnetization, fit_critical, free_energy,
                   monte_carlo_walk, quasiperiodic_environment,
                   random_environment, stochastic_gauge, susceptibility_crossing,
                   uniform_environment, walk_g_profile, walk_msd)

__version__ = "0.1.0"
