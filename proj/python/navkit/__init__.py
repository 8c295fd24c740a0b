from ._navkit import (
    AngleAtPi,
    ConfigError,
    CovarianceNotPSD,
    FrameMismatch,
    NavkitError,
    NotARotation,
    SingularInnovation,
    SpecInvalid,
    autonomy,
    config_hash,
    main,
    monte_carlo,
    run,
    se23_adjoint,
    se23_exp,
    se23_inverse,
    se23_log,
    skew,
    so3_exp,
    so3_log,
)

__all__ = [
    "AngleAtPi",
    "ConfigError",
    "CovarianceNotPSD",
    "FrameMismatch",
    "NavkitError",
    "NotARotation",
    "SingularInnovation",
    "SpecInvalid",
    "autonomy",
    "config_hash",
    "main",
    "monte_carlo",
    "run",
    "se23_adjoint",
    "se23_exp",
    "se23_inverse",
    "se23_log",
    "skew",
    "so3_exp",
    "so3_log",
]
