#!/usr/bin/env python3
"""
Pydantic models for analysis configuration and scenario files.
AnalysisConfig holds the numerical tunables; Scenario describes one study.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.dynamics.perturbations import ControlMode, PerturbationKind
from src.dynamics.systems import TimeVaryingSystem, get_system
from src.kernels.lie import MatrixFamily, ProbabilityVector

Matrix = List[List[float]]


class OutputFormat(str, Enum):
    """Report file formats"""
    JSON = "json"
    CSV = "csv"
    BOTH = "both"


class SuiteKind(str, Enum):
    """Generated family suites"""
    SOLVABLE = "solvable"
    SL2 = "sl2"


class AnalysisConfig(BaseModel):
    """Numerical tolerances, thresholds and run defaults"""
    rank_tol: float = Field(1e-9, gt=0, description="Relative rank tolerance for QR and null spaces")
    eigenspace_tol: float = Field(1e-7, gt=0, description="Tolerance for common eigenvector extraction")
    weight_cluster_tol: float = Field(1e-6, gt=0, description="Eigenvalues closer than this form one weight")
    hurwitz_margin: float = Field(1e-9, ge=0, description="Hurwitz iff spectral abscissa < -margin")
    verdict_band: float = Field(0.01, gt=0, description="Slope band for Stable/Unstable verdicts")
    marginal_band: float = Field(0.1, ge=0, description="|max theta| below this is not judged")
    stable_threshold: float = Field(0.95, gt=0, le=1, description="Stable fraction for an almost-sure PASS")
    unstable_threshold: float = Field(0.05, ge=0, lt=1, description="Stable fraction for an almost-sure FAIL")
    sweep_threshold: float = Field(0.9, gt=0, le=1, description="Stable fraction defining delta_emp")
    min_horizon: float = Field(50.0, gt=0, description="Shortest horizon the classifier accepts")
    min_trials: int = Field(20, ge=1, description="Fewest Monte-Carlo trials accepted")
    dt: float = Field(0.01, gt=0, le=0.01, description="RK4 step for perturbed integration")
    frozen_dt: float = Field(1e-3, gt=0, le=1, description="Substep for time-varying coefficients")
    initial_states: int = Field(8, ge=1, description="Initial states per perturbed trial")
    ells: List[int] = Field(default_factory=lambda: list(range(9)), description="Liao window exponents")
    growth_margin: float = Field(1e-6, ge=0, description="Margin added to the interval growth bound")
    threads: Optional[int] = Field(None, ge=1, description="Worker threads (None: all cores)")
    log_level: str = Field("INFO", description="Logging level name")

    @field_validator('ells')
    def validate_ells(cls, v):
        if not v or any(ell < 0 for ell in v):
            raise ValueError("ells must be a non-empty list of non-negative integers")
        return sorted(set(v))

    @field_validator('log_level')
    def validate_log_level(cls, v):
        level = v.strip().upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level '{v}'")
        return level

    @model_validator(mode='after')
    def validate_thresholds(self):
        if self.unstable_threshold >= self.stable_threshold:
            raise ValueError("unstable_threshold must be below stable_threshold")
        return self

    @classmethod
    def get_default_config(cls) -> 'AnalysisConfig':
        """Get the default analysis configuration"""
        return cls()


class SystemSpec(BaseModel):
    """Built-in time-varying system"""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="marcus-yamabe or triangular-decay")
    params: dict = Field(default_factory=dict, description="Keyword parameters of the system")

    def build(self) -> TimeVaryingSystem:
        return get_system(self.name, **self.params)

    @model_validator(mode='after')
    def validate_system(self):
        try:
            self.build()
        except TypeError as e:
            raise ValueError(f"Bad parameters for system '{self.name}': {e}") from e
        return self


class PerturbationGrid(BaseModel):
    """Perturbation kinds and magnitudes for a robustness sweep"""
    model_config = ConfigDict(extra="forbid")

    kinds: List[PerturbationKind] = Field(
        default_factory=lambda: [
            PerturbationKind.LINEAR_COUPLING,
            PerturbationKind.ROTATION,
            PerturbationKind.RANDOM_DIRECTION,
        ],
        description="Perturbation kinds swept at every magnitude",
    )
    grid: List[float] = Field(
        default_factory=lambda: [0.0, 0.05, 0.1, 0.2, 0.4, 0.8],
        description="Increasing magnitudes L",
    )
    dt: float = Field(0.01, gt=0, le=0.01, description="RK4 step")
    omega: float = Field(1.0, description="Angular speed of the rotation perturbation")

    @field_validator('grid')
    def validate_grid(cls, v):
        if not v or any(x < 0 for x in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("grid must be non-empty, non-negative and strictly increasing")
        return v


class ControlSpec(BaseModel):
    """Control-product perturbation B_i(x) u(t)"""
    model_config = ConfigDict(extra="forbid")

    beta: float = Field(1.0, gt=0, description="Declared bound ||B_i(x)|| <= beta ||x||")
    mode: ControlMode = Field(ControlMode.NORM_DIRECTION, description="Shape of B_i(x)")
    delta_grid: List[float] = Field(
        default_factory=lambda: [0.0, 0.025, 0.05, 0.1, 0.2],
        description="Increasing input bounds delta",
    )
    directions: Optional[List[Matrix]] = Field(None, description="Per-symbol matrices G_i, ||G_i|| <= 1")
    dt: float = Field(0.01, gt=0, le=0.01, description="RK4 step")

    @field_validator('delta_grid')
    def validate_delta_grid(cls, v):
        if not v or any(x < 0 for x in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("delta_grid must be non-empty, non-negative and strictly increasing")
        return v


class SuiteSpec(BaseModel):
    """Randomly generated family suite"""
    model_config = ConfigDict(extra="forbid")

    kind: SuiteKind = Field(SuiteKind.SOLVABLE, description="solvable or sl2")
    size: int = Field(20, ge=1, description="Number of families")
    n: int = Field(2, ge=1, le=16, description="Matrix dimension")
    n_symbols: int = Field(2, ge=1, description="Matrices per family")


class OutputSpec(BaseModel):
    """Where and how reports are written"""
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = Field(None, description="Report directory (CLI --out overrides)")
    format: OutputFormat = Field(OutputFormat.JSON, description="json, csv or both")


class Scenario(BaseModel):
    """One study: a matrix family or time-varying system plus run parameters"""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1, description="Scenario name")
    description: str = Field("", description="Free text")
    family: Optional[List[Matrix]] = Field(None, description="Matrices A_1..A_N, row-major")
    labels: Optional[List[str]] = Field(None, description="Optional matrix labels")
    system: Optional[SystemSpec] = Field(None, description="Time-varying system instead of a family")
    suite: Optional[SuiteSpec] = Field(None, description="Generated suite instead of a family")
    alpha: Optional[List[float]] = Field(None, description="Probability vector (default uniform)")
    signal: Optional[List[int]] = Field(None, description="Periodic symbol pattern instead of sampling")
    tau: Optional[float] = Field(None, ge=0, lt=1, description="Fixed phase for a periodic signal")
    horizon: float = Field(200.0, gt=0, description="Horizon T")
    trials: int = Field(50, ge=1, description="Sampled signals")
    seed: int = Field(0, ge=0, description="Master seed")
    ells: Optional[List[int]] = Field(None, description="Liao window exponents (default from config)")
    random_frame: bool = Field(False, description="Start QR from a random orthonormal frame")
    perturbation: PerturbationGrid = Field(default_factory=PerturbationGrid)
    control: Optional[ControlSpec] = Field(None, description="Control-product experiment")
    outputs: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator('name')
    def validate_name(cls, v):
        if not v.strip():
            raise ValueError("Scenario name cannot be empty")
        return v.strip()

    @model_validator(mode='after')
    def validate_scenario(self):
        sources = [s for s in (self.family, self.system, self.suite) if s is not None]
        if len(sources) != 1:
            raise ValueError("Exactly one of family, system or suite must be given")
        if self.family is not None:
            fam = self.to_family()
            if self.alpha is not None and len(self.alpha) != fam.size:
                raise ValueError(f"alpha has {len(self.alpha)} entries for {fam.size} matrices")
            if self.signal is not None and any(s < 1 or s > fam.size for s in self.signal):
                raise ValueError(f"signal symbols must lie in 1..{fam.size}")
            if self.control is not None and self.control.directions is not None:
                if len(self.control.directions) != fam.size:
                    raise ValueError(
                        f"control.directions has {len(self.control.directions)} matrices for {fam.size} symbols"
                    )
        if self.alpha is not None:
            ProbabilityVector(tuple(self.alpha))
        if self.signal is not None and self.family is None:
            raise ValueError("signal requires a matrix family")
        return self

    def to_family(self) -> MatrixFamily:
        if self.family is None:
            raise ValueError(f"Scenario '{self.name}' has no matrix family")
        try:
            return MatrixFamily.from_lists(self.family, self.labels)
        except ValueError as e:
            raise ValueError(f"family: {e}") from e

    def to_alpha(self, size: Optional[int] = None) -> ProbabilityVector:
        if self.alpha is not None:
            return ProbabilityVector(tuple(self.alpha))
        if size is None:
            size = self.to_family().size
        return ProbabilityVector.uniform(size)

    def to_system(self) -> TimeVaryingSystem:
        if self.system is None:
            raise ValueError(f"Scenario '{self.name}' has no time-varying system")
        return self.system.build()
