"""Numerical homogenization of discrete elliptic equations with i.i.d. random
conductivities on periodic lattices."""
from .corrector import (CorrectorSolution, PsiField, build_psi, solve_modified_corrector,
                        solve_periodic_corrector, verify_sensitivity_formulas)
from .environment import SELF_DUAL_LAW, ConductivityLaw, StreamKey, law_moments, sample_environment
from .estimators import (EstimateRecord, IdentityReport, dyadic_difference, energy_density,
                         energy_identity_check, estimate_AL_periodic, estimate_AT, estimate_ATL,
                         spectral_cross_check, variational_identity_check)
from .experiments import StudyManifest, emit_report, run_study
from .fitting import DegenerateData, ScalingFit, fit_scaling
from .green import (DecayProfile, GreenFunction, SubsolutionViolation, convolution_scaling,
                    decay_profile, gradient_annuli_norms, green_function, harnack_ratio)
from .lattice import (SizingError, TorusLattice, divergence, gradient, mask_eta, read_field,
                      write_field)
from .probability import EnumerableEnvironment, exact_expectation, verify_covariance_bound
from .solver import NonConvergence, OperatorSpec, SolveReport, cg_solve, dense_spectrum

__version__ = "0.1.0"
