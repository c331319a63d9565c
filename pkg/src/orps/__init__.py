"""(omega, rho)-periodic solutions of impulsive integro-differential equations."""
from ._backend import BACKEND
from .errors import (CommutationViolation, ConfigParse, NoConvergence, OrpsError, SchemaMismatch,
                     SingularGap)
from .flow import (ImpulseSchedule, PiecewiseTrajectory, StepConfig, VolterraProblem, evolve_linear,
                   evolve_semilinear, impulse_count, periodicity_residual, transition_product)
from .kernel import (BoundReport, KernelEvaluation, bound_C1, bound_C1_commuting, bound_C2,
                     bound_C2_commuting, kernel_H, kernel_H_commuting, kernel_integral_numeric,
                     kernel_sum_numeric)
from .quadrature import QuadratureConfig
from .semigroup import GrowthEstimate, check_commute, estimate_growth, expm, invert_monodromy_gap
from .solver import (Certificate, PicardConfig, contraction_certificate, existence_ball, picard_apply,
                     solve_linear_periodic, solve_semilinear_picard)
from .system import SystemSpec
from .verifier import check_assumptions, shooting_oracle, validate_solution

__version__ = "0.1.0"
