"""Life-cycle consumption/saving experiment platform."""

from .model import (
    ModelParams,
    Treatment,
    ShockSequence,
    LifecyclePath,
    utility,
    income,
    expected_remaining_income,
    precautionary_term,
    optimal_consumption,
    optimal_policy,
    dp_oracle,
    simulate_path,
)

__all__ = [
    "ModelParams",
    "Treatment",
    "ShockSequence",
    "LifecyclePath",
    "utility",
    "income",
    "expected_remaining_income",
    "precautionary_term",
    "optimal_consumption",
    "optimal_policy",
    "dp_oracle",
    "simulate_path",
]

__version__ = "0.1.0"
