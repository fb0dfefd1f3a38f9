"""Random symmetric polytopes from the cone measure of isotropic convex bodies:
exact hulls, isotropic constants, Orlicz-norm estimates and tail bounds."""
from .body import (
    FAMILIES,
    LinearImage,
    LpBall,
    ScaledL1,
    SymmetricHPolytope,
    body_from_dict,
    body_isotropic_constant,
    body_volume,
    family_body,
    isotropic_normalize,
    minkowski_functional,
)
from .concentration import (
    MomentSpec,
    OrliczEstimate,
    bernstein_bound,
    cone_moment_linear,
    empirical_orlicz_norm,
    empirical_sum_tail,
    l1_ball_monomial_moment,
    moment_transfer_coefficient,
    psi2_l1_ball_certificate,
    verify_psi1_general,
    verify_psi2_unconditional,
)
from .experiments import (
    ExperimentConfig,
    run_general_experiment,
    run_unconditional_experiment,
    run_volume_radius_check,
)
from .hull import (
    SymmetricPolytope,
    build_hull,
    facet_sign_sum_max,
    integral_l1,
    polytope_covariance,
    polytope_volume,
)
from .isotropy import BoundChain, bound_chain, isotropic_constant_polytope, max_subset_sign_sum
from .kernels import BACKEND
from .sampling import SampleBatch, make_rng, sample_cone_boundary, sample_coupled_pair, sample_uniform
from .suite import run_verification_suite

__version__ = "0.1.0"
