"""Soft squeezing of charged-particle motion in driven quadratic traps.

The package follows one object through six views: the 2x2 symplectic
matrix u(tau, tau0) that transports phase-space coordinates under
q'' + beta(tau) q = 0.

- core: the matrix algebra, stiffness profiles, closed-form generators
- evolution: integration of u and its zone classification
- mathieu: stability scans over the (beta0, beta1) drive plane
- design: inverse construction of soft squeezing pulses from theta(tau)
- packets: Gaussian second moments and uncertainty shadows
- physical: CGS magnitudes for realizing a profile in the laboratory
"""

from .core import (
    ANALYTIC_DET_TOL,
    INTEGRATED_DET_TOL,
    BetaProfile,
    CanonicalState,
    CompositeBeta,
    ConstantBeta,
    MathieuBeta,
    SampledBeta,
    SymplecticMatrix2,
    beta_eval,
    compose,
    free_motion,
    is_equidiagonal,
    profile_from_dict,
    profile_from_json,
    rotation_matrix,
    squeeze_compose,
    squeezed_fourier,
    symmetric_product,
)
from .design import (
    ConstantTail,
    DesignedPulse,
    DesignReport,
    LemmaReport,
    SingularityError,
    ThetaAnsatz,
    ThetaDerivedBeta,
    beta_from_theta,
    build_chain,
    build_pulse,
    quarter_period,
    solve_theta_coeffs,
    theta_eval,
    validate_lemma,
    verify_design,
)
from .evolution import (
    DEFAULT_CONFIG,
    IntegrationError,
    IntegratorConfig,
    ZoneReport,
    apply_to_state,
    classify,
    integrate,
    integrate_path,
    integrate_symmetric,
    monodromy,
)
from .mathieu import (
    ConvergenceError,
    DoubleZeroResult,
    LocusPoint,
    ScanRect,
    ScanResult,
    default_rect,
    find_double_zero,
    scan_grid,
    trace_locus,
)
from .packets import (
    MomentState,
    backcast_error,
    congruence,
    delta_q,
    gaussian_init,
    propagate,
    shadow,
)
from .physical import (
    PhysicalContext,
    from_dimensionless,
    magnetic_amplitude,
    magnetic_beta,
    paul_voltages,
    radiative_ratio,
    rotating_cylinder_field,
    scaling_table,
    solenoid_coefficient,
    solenoid_correction,
    to_dimensionless,
)

__version__ = "0.1.0"

__all__ = [
    "ANALYTIC_DET_TOL",
    "INTEGRATED_DET_TOL",
    "BetaProfile",
    "CanonicalState",
    "CompositeBeta",
    "ConstantBeta",
    "MathieuBeta",
    "SampledBeta",
    "SymplecticMatrix2",
    "beta_eval",
    "compose",
    "free_motion",
    "is_equidiagonal",
    "profile_from_dict",
    "profile_from_json",
    "rotation_matrix",
    "squeeze_compose",
    "squeezed_fourier",
    "symmetric_product",
    "ConstantTail",
    "DesignedPulse",
    "DesignReport",
    "LemmaReport",
    "SingularityError",
    "ThetaAnsatz",
    "ThetaDerivedBeta",
    "beta_from_theta",
    "build_chain",
    "build_pulse",
    "quarter_period",
    "solve_theta_coeffs",
    "theta_eval",
    "validate_lemma",
    "verify_design",
    "DEFAULT_CONFIG",
    "IntegrationError",
    "IntegratorConfig",
    "ZoneReport",
    "apply_to_state",
    "classify",
    "integrate",
    "integrate_path",
    "integrate_symmetric",
    "monodromy",
    "ConvergenceError",
    "DoubleZeroResult",
    "LocusPoint",
    "ScanRect",
    "ScanResult",
    "default_rect",
    "find_double_zero",
    "scan_grid",
    "trace_locus",
    "MomentState",
    "backcast_error",
    "congruence",
    "delta_q",
    "gaussian_init",
    "propagate",
    "shadow",
    "PhysicalContext",
    "from_dimensionless",
    "magnetic_amplitude",
    "magnetic_beta",
    "paul_voltages",
    "radiative_ratio",
    "rotating_cylinder_field",
    "scaling_table",
    "solenoid_coefficient",
    "solenoid_correction",
    "to_dimensionless",
]
