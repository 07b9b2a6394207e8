"""Population-level dynamics of a continuous phonetic parameter.

Two engines over the same model: exact mean/variance recurrences for
learners with tractable estimators (``analytic``), and an agent-based
Monte Carlo simulator for the rest (``simulate``), plus a parameter-sweep
driver that maps out where gradual drift turns into an abrupt shift
(``sweep``).
"""

__version__ = "0.1.0"

from .core import (
    ComplexQuadratic,
    LearningConfig,
    MomentState,
    Naive,
    PhoneticModel,
    PopulationConfig,
    PopulationState,
    PriorSpec,
    SimpleGaussian,
    TeacherRule,
    validate_config,
)

__all__ = [
    "__version__",
    "ComplexQuadratic",
    "LearningConfig",
    "MomentState",
    "Naive",
    "PhoneticModel",
    "PopulationConfig",
    "PopulationState",
    "PriorSpec",
    "SimpleGaussian",
    "TeacherRule",
    "validate_config",
]
