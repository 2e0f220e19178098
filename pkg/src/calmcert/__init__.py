"""calmcert: isolated-calmness certificates for regularized least squares."""

__version__ = "0.1.0"

from .linalg import Tolerances, Subspace, svd, sym_eig, null_space, \
    range_space, intersect_subspaces
from .model import (LinearOp, ProblemInstance, RegularizerSpec, SolutionPair,
                    InstanceError, load_instance, instance_hash, materialize,
                    group_lasso, l1, nuclear, polyhedral_indicator)
from .solver import SolverConfig, SolverError, solve, solve_perturbed, kkt_residual
from .certificates import (CertificateReport, CertificateError, Conclusion,
                           certify_solution_map, certify_primal_dual,
                           strong_solution_equivalence,
                           uniqueness_equivalence_check)
from .empirics import (KappaEstimate, GraphSample, perturbation_sweep,
                       instability_probe, second_subderivative_estimate,
                       kernel_formula_check, zero_product_check)
from .cones import (TrivialityVerdict, membership, trivial_intersection,
                    preimage, tangent_with_range_restriction)
from .reporting import save_report

__all__ = [name for name in dir() if not name.startswith("_")]
