"""Rotationally symmetric positive-scalar-curvature metrics.

Construction of torpedo / boot / step / bent-cylinder warping profiles,
deformation procedures between them (concordance from isotopy, stretching,
standardisation, bending), and numerical certification of scalar-curvature
positivity against both closed-form formulas and an independent
finite-difference oracle.
"""

from .errors import (
    ConstructionError,
    DegeneratePlaneError,
    InvalidMetricError,
    NoCertificateError,
    RangeError,
    UnsupportedOrderError,
)
from .warp import (
    K_MAX,
    Affine,
    Antider,
    Compose,
    Const,
    Deriv,
    InverseOf,
    JetVector,
    MembershipReport,
    Prod,
    Recip,
    SinCap,
    SmoothStep,
    Sqrt,
    Sum,
    WarpFunction,
    arc_length_reparam,
    check_B_membership,
    check_W_membership,
    from_descriptor,
    glue,
    jet_distance,
    rescale_to_unit,
    to_descriptor,
)
from .torpedo import (
    TorpedoCurve,
    TorpedoSpec,
    alpha_ordinate,
    double_torpedo,
    is_torpedo,
    perfect_torpedo,
    retract_to_perfect,
    torpedo_curve,
)
from .curvature import (
    CurvatureFamily,
    GridSpec,
    PositivityCertificate,
    RotSymMetric,
    bend_family_curvature,
    bent_cylinder_curvature,
    certify_positive,
    scalar_curvature_double_warped,
    scalar_curvature_single,
)
from .oracle import (
    ChartMetric,
    CrossCheckReport,
    chart_from_rotsym,
    concordance_chart,
    cross_check,
    euclidean_chart,
    fd_christoffels,
    fd_scalar_curvature,
    fd_sectional,
    stereographic_sphere_chart,
)
from .curves import (
    AdmissibleCurve,
    arc_length_param,
    compose_warp,
    curve_from_obj,
    curve_rows,
    curve_to_obj,
    gl_curve,
    graph_curve,
    homotopy_to_vertical,
    s_gamma,
    validate_admissible,
    vertical_curve,
)
from .deform import (
    ConcordanceResult,
    HomotopyCertificate,
    StretchFunction,
    WarpIsotopy,
    certify_homotopy,
    concordance_certificate_at,
    concordance_curvature_gap,
    concordance_from_isotopy,
    cutoff,
    neck_stretch,
    radius_normalize,
    standardize_to_torpedo,
    stretch_audit,
    stretch_warp,
    stretching_function,
    torpedo_radius_isotopy,
)
from .bend import (
    BendRadius,
    BendSlice,
    BootAssembly,
    BootIsotopySlice,
    BootRegion,
    BootSpec,
    InterfaceCheck,
    StepBase,
    StepMetric,
    StepRetract,
    StepSpec,
    StepStage,
    TransitionProfile,
    bend_isotopy,
    bent_cylinder_metric,
    boot_isotopy,
    boot_metric,
    min_bend_radius,
    step_metric,
    step_retract,
    transition_profile,
)

__version__ = "0.1.0"
