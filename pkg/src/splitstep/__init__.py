"""Sum splitting time integration for nonlinear parabolic problems."""
from ._kernels import BACKEND
from .analysis import apriori_quantities, error_norms, estimate_order, manufactured_problem, reference_solve
from .decomposition import (
    PartitionOfUnity,
    SourceDescriptor,
    averaged_source,
    build_overlapping_subdomains,
    build_partition_of_unity,
    split_source,
)
from .integrators import SplitProblem, Trajectory, build_split_problem, run
from .mesh import SpatialMesh, TimeGrid, build_uniform_mesh, dual_norm_surrogate, gradient_seminorm, h_inner, lp_norm
from .operators import Alpha, OperatorSpec, apply_operator
from .resolvent import ResolventConfig, solve_resolvent

__version__ = "0.1.0"
