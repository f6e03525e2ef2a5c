"""Isoparametric Lagrange FE toolkit for fractional-order norms on curved
2D domains, with a rate-experiment harness that certifies the inverse,
interpolation, regularity, trace, product, and domain-deformation
estimates behind the discrete 3/2-order Sobolev-like norm calculus."""

from .assembly import (
    FeFunction,
    GramSet,
    assemble_grams,
    eval_fe,
    grams_of,
    interior_part,
    nodal_interp_bulk,
    nodal_interp_surface,
    trace,
    zero_function,
)
from .experiments import ExperimentConfig, run_experiment, run_all, REGISTRY
from .gagliardo import gagliardo_half_oracle, gagliardo_seminorms
from .harness import RateTable, emit, fit_rate
from .interp import (
    dirichlet_lift,
    dirichlet_riesz_data,
    ritz_map,
    scott_zhang,
    sz_via_dirichlet,
    winf_like_norm,
)
from .lifting import (
    LiftMap,
    MeshLocator,
    build_lift_map,
    inverse_lift,
    lambda_jacobian,
    lambda_lift,
    lift_function,
)
from .meshing import Mesh, build_disk_mesh, build_square_mesh, disk_mesh, geometry_map
from .multilinear import (
    MultilinearForm,
    comparison_decompose,
    deformation_tensor,
    det_form,
    ml_eval,
    ml_fix_slot,
    ml_from_function,
    ml_norm,
    neumann_tail,
    resolvent_difference,
)
from .norms import (
    SpectralBasis,
    boundary_sobolev_norm,
    dual_neg_half_norm,
    h_s_norm,
    hhat_threehalf_norm,
    spectral_decomp,
    vec_dual_half_norm,
)
from .quadrature import QuadratureRule, quadrature
from .solvers import (
    OverkillSolution,
    continuous_surrogate,
    deformed_dirichlet_energy,
    solve_dirichlet_fe,
    solve_robin_fe,
)

__version__ = "0.1.0"
