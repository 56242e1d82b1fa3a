"""Transport of a scalar by nonlocal velocity laws on the line.

Markers carry fixed values while their positions move with a velocity
reconstructed from the field itself. Piecewise-linear interpolation makes
every velocity law integrable in closed form, so the only discretization
error in a run comes from the time stepper.
"""

from pinchflow.diagnostics import (
    CheckLine,
    CheckReport,
    DiagRecord,
    FitResult,
    LemmaDecomposition,
    fit_growth,
    growth_discrimination,
    hyperbolic_approx_compare,
    lemma_bounds_check,
    lemma_decomposition,
    log_ratio_rate,
    patch_bounds,
    record,
    support_bound_check,
    ux_bound_check,
    ux_calibration,
)
from pinchflow.errors import (
    ConfigError,
    ContractError,
    FitError,
    HypothesisError,
    IntegrationError,
    PinchflowError,
)
from pinchflow.evolve import (
    MarkerCrossing,
    StepControl,
    StepUnderflow,
    Trajectory,
    run,
    step,
    velocities,
)
from pinchflow.fields import MarkerField
from pinchflow.kernels import (
    Segment,
    VelocityLaw,
    hilbert_many,
    hilbert_transform_at,
    odd_power_kernel,
    ratio_kernel,
    reference_integrate,
    segment_log_velocity,
    segment_power_velocity,
    velocity,
    velocity_many,
)
from pinchflow.profiles import (
    ProfileSpec,
    build_euler_profile,
    build_patch_profile,
    euler_default_spec,
    patch_default_spec,
    pinch_strength_constant,
    pinch_time_bound,
)

__version__ = "0.1.0"

__all__ = [
    "CheckLine",
    "CheckReport",
    "ConfigError",
    "ContractError",
    "DiagRecord",
    "FitError",
    "FitResult",
    "HypothesisError",
    "IntegrationError",
    "LemmaDecomposition",
    "MarkerCrossing",
    "MarkerField",
    "PinchflowError",
    "ProfileSpec",
    "Segment",
    "StepControl",
    "StepUnderflow",
    "Trajectory",
    "VelocityLaw",
    "build_euler_profile",
    "build_patch_profile",
    "euler_default_spec",
    "fit_growth",
    "growth_discrimination",
    "hilbert_many",
    "hilbert_transform_at",
    "hyperbolic_approx_compare",
    "lemma_bounds_check",
    "lemma_decomposition",
    "log_ratio_rate",
    "odd_power_kernel",
    "patch_bounds",
    "patch_default_spec",
    "pinch_strength_constant",
    "pinch_time_bound",
    "ratio_kernel",
    "record",
    "reference_integrate",
    "run",
    "segment_log_velocity",
    "segment_power_velocity",
    "step",
    "support_bound_check",
    "ux_bound_check",
    "ux_calibration",
    "velocities",
    "velocity",
    "velocity_many",
    "__version__",
]
