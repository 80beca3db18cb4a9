"""p-allowable index sets, threshold exponents, monomial L^p norms and
p-monomial basis kernels for Reinhardt monomial polyhedra."""
from .geometry import (
    DISC,
    Dilate,
    Hartogs,
    Intersection,
    Membership,
    Notch,
    OmegaA,
    PositiveReal,
    Product,
    Type1,
    Type2,
    Union,
    build_domain,
    contains_point,
    geometric_mean_shadow,
    parse_domain,
    sample_shadow,
    shadow_polytope,
)
from .indexsets import (
    conditions_for,
    enumerate_sp,
    intersection_excess,
    is_allowable,
    threshold_scan,
    thresholds,
)
from .kernel import (
    continuity_experiment,
    domination_check,
    evaluate_kernel,
    ramadanov_experiment,
    summand,
    twist,
)
from .norms import closed_form_norm_p, monte_carlo_norm_p, product_norm, quadrature_norm_p

__version__ = "0.1.0"
