"""Numerical toolkit for variable exponent Lebesgue spaces on bounded boxes."""

from .compactness import (
    CompactnessReport,
    FalsificationError,
    Thresholds,
    Verdict,
    ascoli_diagnostics,
    criterion_verdict,
    eigenvalue_one_check,
    greedy_epsilon_net,
    pairwise_distances,
    steklov_deviation,
    sudakov_bound_check,
    total_boundedness_profile,
)
from .exponent import (
    DualExponentField,
    ExponentField,
    decay_check,
    dual_exponent,
    log_holder_check,
    parse_exponent,
)
from .families import FunctionFamily, make_family
from .grid import (
    GridDomain,
    GridFunction,
    IndicatorSet,
    ball_indicator,
    box_indicator,
    integrate,
    symmetric_difference_measure,
)
from .norms import (
    NormResult,
    holder_check,
    ideal_check,
    indicator_norm_bounds,
    luxemburg_norm,
    luxemburg_norm_infty,
    modular,
)
from .steklov import (
    ApproximateIdentity,
    SteklovMatrix,
    mollifier_bound_check,
    mollify,
    parse_kernel,
    radial_majorant,
    steklov_apply,
    steklov_matrix,
    theta_bound,
    measured_theta,
    uniform_bound_check,
    unit_ball_volume,
)

__version__ = "0.1.0"
