"""Domain types, configuration files, and validation shared by every engine."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class PhoneticModel:
    """Fixed linguistic constants of the two-vowel system.

    All frequencies are in Hz, variances in Hz^2.  ``lam`` is the mean of the
    coarticulatory channel bias (subtracted from every produced token) and
    ``omega`` its standard deviation.
    """

    mu_a: float      # F1 mean of the low vowel category
    mu_i: float      # F1 mean of the high vowel category
    sigma_a: float   # production SD of the low vowel and its contextual variant
    omega: float     # channel-bias SD
    lam: float       # channel-bias mean

    @property
    def sigma_a2(self) -> float:
        return self.sigma_a * self.sigma_a

    @property
    def omega2(self) -> float:
        return self.omega * self.omega

    @property
    def noise_var(self) -> float:
        """Variance of a single produced token around the speaker's c."""
        return self.sigma_a2 + self.omega2

    @property
    def delta_mu(self) -> float:
        return self.mu_a - self.mu_i

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.mu_a + self.mu_i)


@dataclass(frozen=True)
class Naive:
    """No prior: the learner's point estimate is the maximum-likelihood one."""


@dataclass(frozen=True)
class SimpleGaussian:
    """Gaussian prior on c centred at mu_a with SD tau (Hz)."""

    tau: float


@dataclass(frozen=True)
class ComplexQuadratic:
    """Quadratic prior weighting c near either category mean; strength a.

    Smaller ``a`` means a stronger pull toward the two endpoints.
    """

    a: float


PriorSpec = Union[Naive, SimpleGaussian, ComplexQuadratic]


@dataclass(frozen=True)
class LearningConfig:
    n: int           # examples per learner
    prior: PriorSpec


class TeacherRule(Enum):
    """How many previous-generation agents supply a learner's examples."""

    ONE = "one"
    TWO = "two"
    ALL = "all"


@dataclass(frozen=True)
class PopulationConfig:
    M: int                  # population size per generation
    teachers: TeacherRule
    seed: int               # 64-bit master seed
    start_mean: float       # Hz
    start_var: float        # Hz^2 (variance, not SD)


@dataclass(frozen=True)
class PopulationState:
    """Generation index plus the per-agent contextual-variant means."""

    t: int
    c_values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.c_values, dtype=np.float64)
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "c_values", arr)


@dataclass(frozen=True)
class MomentState:
    """(mean, variance) pair iterated by the closed-form engine."""

    mean: float
    var: float


@dataclass(frozen=True)
class Violation:
    name: str
    message: str

    def __str__(self) -> str:
        return f"{self.name}: {self.message}"


class ConfigError(ValueError):
    """Raised when a configuration fails validation."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def validate_config(
    model: PhoneticModel, learn: LearningConfig, pop: PopulationConfig
) -> list[Violation]:
    """Check every type invariant; return the (possibly empty) violation list.

    Pure and idempotent: never mutates its arguments.
    """
    out: list[Violation] = []
    if not _finite(model.mu_a, model.mu_i, model.sigma_a, model.omega, model.lam):
        out.append(Violation("NonFiniteValue", "model parameters must all be finite"))
    else:
        if not model.mu_a > model.mu_i:
            out.append(Violation("MeansOutOfOrder", f"mu_a={model.mu_a} must exceed mu_i={model.mu_i}"))
        if not model.sigma_a > 0:
            out.append(Violation("NonPositiveSigma", f"sigma_a={model.sigma_a} must be > 0"))
        if model.omega < 0:
            out.append(Violation("NegativeOmega", f"omega={model.omega} must be >= 0"))
        if model.lam < 0:
            out.append(Violation("NegativeLambda", f"lambda={model.lam} must be >= 0"))
    if learn.n < 2:
        out.append(Violation("TooFewExamples", f"n={learn.n} but the recurrences assume n >= 2"))
    prior = learn.prior
    if isinstance(prior, SimpleGaussian):
        if not (_finite(prior.tau) and prior.tau > 0):
            out.append(Violation("NonPositiveTau", f"tau={prior.tau} must be > 0"))
    elif isinstance(prior, ComplexQuadratic):
        if not (_finite(prior.a) and prior.a > 0):
            out.append(Violation("NonPositiveA", f"a={prior.a} must be > 0"))
    if pop.M < 2:
        out.append(Violation("TooFewAgents", f"M={pop.M} must be >= 2"))
    if not _finite(pop.start_mean, pop.start_var):
        out.append(Violation("NonFiniteValue", "start_mean/start_var must be finite"))
    elif pop.start_var < 0:
        out.append(Violation("NegativeStartVariance", f"start_var={pop.start_var} must be >= 0"))
    return out


def check_config(
    model: PhoneticModel, learn: LearningConfig, pop: PopulationConfig
) -> None:
    """Raise ConfigError if any invariant is violated."""
    violations = validate_config(model, learn, pop)
    if violations:
        raise ConfigError(violations)


# ---------------------------------------------------------------------------
# Configuration file format: flat TOML-style key/value pairs.
#
# Keys: mu_a, mu_i, sigma_a, omega, lambda, n, prior.kind ("naive" | "simple"
# | "complex"), prior.tau, prior.a, M, teachers ("one" | "two" | "all"),
# seed, start_mean, start_var.
# ---------------------------------------------------------------------------

_PRIOR_KINDS = ("naive", "simple", "complex")


def config_to_dict(
    model: PhoneticModel, learn: LearningConfig, pop: PopulationConfig
) -> dict:
    """Flatten a configuration into the dotted-key dictionary form."""
    d = {
        "mu_a": model.mu_a,
        "mu_i": model.mu_i,
        "sigma_a": model.sigma_a,
        "omega": model.omega,
        "lambda": model.lam,
        "n": learn.n,
        "M": pop.M,
        "teachers": pop.teachers.value,
        "seed": pop.seed,
        "start_mean": pop.start_mean,
        "start_var": pop.start_var,
    }
    prior = learn.prior
    if isinstance(prior, Naive):
        d["prior.kind"] = "naive"
    elif isinstance(prior, SimpleGaussian):
        d["prior.kind"] = "simple"
        d["prior.tau"] = prior.tau
    else:
        d["prior.kind"] = "complex"
        d["prior.a"] = prior.a
    return d


def config_from_dict(d: dict) -> tuple[PhoneticModel, LearningConfig, PopulationConfig]:
    """Build a configuration from the flat dotted-key dictionary form.

    Raises ValueError on missing keys, unknown keys, or values with the wrong
    shape; invariant checking is left to validate_config.
    """
    d = dict(d)
    try:
        kind = str(d.pop("prior.kind"))
    except KeyError:
        raise ValueError("missing key: prior.kind") from None
    if kind not in _PRIOR_KINDS:
        raise ValueError(f"prior.kind must be one of {_PRIOR_KINDS}, got {kind!r}")
    prior: PriorSpec
    if kind == "naive":
        prior = Naive()
    elif kind == "simple":
        if "prior.tau" not in d:
            raise ValueError("prior.kind = 'simple' requires prior.tau")
        prior = SimpleGaussian(tau=float(d.pop("prior.tau")))
    else:
        if "prior.a" not in d:
            raise ValueError("prior.kind = 'complex' requires prior.a")
        prior = ComplexQuadratic(a=float(d.pop("prior.a")))
    d.pop("prior.tau", None)
    d.pop("prior.a", None)

    try:
        teachers = TeacherRule(str(d.pop("teachers")))
    except KeyError:
        raise ValueError("missing key: teachers") from None

    def take_float(key: str) -> float:
        try:
            return float(d.pop(key))
        except KeyError:
            raise ValueError(f"missing key: {key}") from None

    def take_int(key: str) -> int:
        try:
            raw = d.pop(key)
        except KeyError:
            raise ValueError(f"missing key: {key}") from None
        if int(raw) != raw:
            raise ValueError(f"{key} must be an integer, got {raw!r}")
        return int(raw)

    model = PhoneticModel(
        mu_a=take_float("mu_a"),
        mu_i=take_float("mu_i"),
        sigma_a=take_float("sigma_a"),
        omega=take_float("omega"),
        lam=take_float("lambda"),
    )
    learn = LearningConfig(n=take_int("n"), prior=prior)
    pop = PopulationConfig(
        M=take_int("M"),
        teachers=teachers,
        seed=take_int("seed"),
        start_mean=take_float("start_mean"),
        start_var=take_float("start_var"),
    )
    if d:
        raise ValueError(f"unknown configuration keys: {sorted(d)}")
    return model, learn, pop


def _flatten(nested: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in nested.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def parse_config(text: str) -> tuple[PhoneticModel, LearningConfig, PopulationConfig]:
    return config_from_dict(_flatten(tomllib.loads(text)))


def load_config(path: str) -> tuple[PhoneticModel, LearningConfig, PopulationConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        # repr round-trips float64 exactly; force a decimal point for TOML
        text = repr(value)
        return text if any(c in text for c in ".eE") else text + ".0"
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dumps_config(
    model: PhoneticModel, learn: LearningConfig, pop: PopulationConfig
) -> str:
    """Serialize a configuration to the flat TOML-style text form."""
    lines = [f"{key} = {_toml_value(value)}" for key, value in config_to_dict(model, learn, pop).items()]
    return "\n".join(lines) + "\n"
