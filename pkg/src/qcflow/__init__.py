"""qcflow: dynamics of planar monotone and reduced-quasiconformal fields.

Trajectory integration with event location, quasipolar coordinates and the
rectifying map, integrating-factor factorization, p-variation estimates, and
the telescoping uniqueness certificate, all at desk scale.
"""

from ._kernel import BACKEND as kernel_backend
from .fields import (
    ComplexPoint,
    FieldDescriptor,
    QCParams,
    builtin_family_fields,
    convex_combo,
    degenerate,
    eval_field,
    eval_field_many,
    example1,
    example2,
    family_membership,
    growth_bounds_check,
    linear,
    monotonicity,
    normalized,
    quasisymmetry_M,
    quasisymmetry_m,
    radial_power,
    reduced_qc_report,
    rescaled,
    wirtinger,
)
from .flow import (
    AnnulusWindow,
    Event,
    TimedCurve,
    Trajectory,
    backward_distance_check,
    extend_to_annulus,
    integrate,
    lipschitz_dependence,
    radial_identity_check,
    speed_monotone_check,
)
from .quasipolar import (
    FactorSample,
    PolarCurve,
    QuasipolarPoint,
    bilipschitz_sample,
    curvature_check,
    grad_theta,
    integrate_polar,
    integrating_factor,
    orthogonal_trajectory,
    phi_map,
    polar_rhs,
    psi_map,
    theta,
    theta_value,
    trajectory_angle_at_radius,
)
from .variation import (
    PartitionSequence,
    SampledArc,
    VariationEstimate,
    arc_from_points,
    arc_from_trajectory,
    arc_pair_estimates,
    c1_modulus,
    inner_product_bound,
    p_variation,
    partition_comparison_bound,
    partition_sequence,
    quadratic_bound_report,
    realized_block_distances,
    rectify_image,
    sampled_min_delta,
    uniqueness_certificate,
)

__version__ = "0.1.0"
