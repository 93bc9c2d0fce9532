from ._core import (
    ConfigError,
    Expr,
    Model,
    ParseError,
    Polynomial,
    ValidationFailed,
    apply_k,
    apply_phi,
    b_operator,
    cead_rhs,
    cli,
    duality_check,
    integrate_cead,
    run_frozen,
    semigroup_apply,
    simulate,
)

__all__ = [
    "ConfigError",
    "Expr",
    "Model",
    "ParseError",
    "Polynomial",
    "ValidationFailed",
    "apply_k",
    "apply_phi",
    "b_operator",
    "cead_rhs",
    "cli",
    "duality_check",
    "integrate_cead",
    "run_frozen",
    "semigroup_apply",
    "simulate",
]
