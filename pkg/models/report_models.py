#!/usr/bin/env python3
"""
Pydantic models for analysis reports.
Reports carry no timestamps so reruns with the same seed are byte-identical.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

LIAO_SLACK = 1e-2


class VerdictClass(str, Enum):
    """Trajectory stability verdicts"""
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"


class DichotomyOutcome(str, Enum):
    """Agreement between the mean-system test and sampled stability"""
    PASS = "PASS"
    FAIL = "FAIL"
    MARGINAL = "MARGINAL"


class ComplexMatrix(BaseModel):
    """Complex matrix split into real and imaginary parts"""
    real: List[List[float]]
    imag: List[List[float]]


class Verdict(BaseModel):
    """Fitted exponent of a log-norm history and its class"""
    verdict: VerdictClass
    slope: float
    band: float = Field(..., gt=0)


class WilsonInterval(BaseModel):
    """95% Wilson score interval for a binomial fraction"""
    low: float = Field(..., ge=0, le=1)
    high: float = Field(..., ge=0, le=1)


class Histogram(BaseModel):
    """Empirical exponent distribution"""
    edges: List[float]
    counts: List[int]


class TriangularizationReport(BaseModel):
    """Unitary transform, per-matrix diagonals and closed-form exponents"""
    t: ComplexMatrix
    diagonals: List[ComplexMatrix] = Field(..., description="Per matrix, a 1 x n diagonal")
    lower_defect: float
    theta: Optional[List[float]] = None
    chi: Optional[float] = None


class SolvabilityReport(BaseModel):
    """Derived series and, when solvable, triangularization diagnostics"""
    scenario: str
    tool_version: str
    n: int
    n_symbols: int
    lie_dimension: int
    bracket_depth: int
    derived_series: List[int]
    solvable: bool
    ell: Optional[int] = None
    mean_hurwitz: bool
    mean_spectral_abscissa: float
    lyapunov_min_eigenvalue: Optional[float] = None
    triangularization: Optional[TriangularizationReport] = None
    stabilizing_alpha: Optional[List[float]] = None
    stabilizing_margin: Optional[float] = None


class ExponentReport(BaseModel):
    """Exponent estimates for one signal"""
    trial: int
    tau: float
    horizon: float
    chi_plus: float
    theta: List[float] = Field(..., description="Per-coordinate Birkhoff averages")
    chi_star: Dict[str, float] = Field(..., description="Liao-type exponent keyed by ell")
    window_lengths: Dict[str, int] = Field(..., description="Delta = 2^ell keyed by ell")
    windows: Dict[str, int] = Field(..., description="Number of windows keyed by ell")
    limsup_proxy: float
    growth_bound: float
    max_interval_rate: float
    closed_form_theta: Optional[List[float]] = None
    closed_form_chi: Optional[float] = None

    @field_validator('window_lengths')
    def validate_window_lengths(cls, v):
        for ell, delta in v.items():
            if delta != 2 ** int(ell):
                raise ValueError(f"Window length for ell={ell} must be {2 ** int(ell)}, got {delta}")
        return v

    def liao_bound_holds(self, slack: float = LIAO_SLACK) -> bool:
        """chi_star >= chi_plus - slack for every ell"""
        return all(v >= self.chi_plus - slack for v in self.chi_star.values())


class ExponentSummary(BaseModel):
    """Exponent reports across sampled signals"""
    scenario: str
    tool_version: str
    seed: int
    trials: int
    horizon: float
    mean_chi_plus: float
    std_chi_plus: float
    mean_chi_star: Dict[str, float]
    closed_form_theta: Optional[List[float]] = None
    closed_form_chi: Optional[float] = None
    reports: List[ExponentReport]


class McReport(BaseModel):
    """Monte-Carlo almost-sure stability estimate"""
    trials: int
    horizon: float
    seed: int
    stable: int
    unstable: int
    indeterminate: int
    stable_fraction: float = Field(..., ge=0, le=1)
    stable_interval: WilsonInterval
    mean_exponent: float
    std_exponent: float
    exponents: List[float]
    histogram: Histogram
    closed_form_theta: Optional[List[float]] = None
    closed_form_chi: Optional[float] = None


class DichotomyReport(BaseModel):
    """Mean-system Hurwitz test against the sampled stable fraction"""
    mean_stable: bool
    max_theta: float
    outcome: DichotomyOutcome
    mc: McReport


class McRunReport(BaseModel):
    """mc command output for a single family"""
    scenario: str
    tool_version: str
    mean_stable: bool
    dichotomy: Optional[DichotomyReport] = None
    mc: McReport


class SuiteEntry(BaseModel):
    """One generated family in a suite run"""
    index: int
    n: int
    max_theta: float
    mean_exponent: float
    exponent_error: float
    outcome: DichotomyOutcome
    stable_fraction: float


class SuiteReport(BaseModel):
    """Dichotomy suite over generated solvable families"""
    scenario: str
    tool_version: str
    size: int
    passed: int
    failed: int
    marginal: int
    max_exponent_error: float
    entries: List[SuiteEntry]


class SolvabilitySuiteEntry(BaseModel):
    """Classifier outcome for one generated family"""
    index: int
    solvable: bool
    derived_series: List[int]


class SolvabilitySuiteReport(BaseModel):
    """Classifier verdicts over a generated suite"""
    scenario: str
    tool_version: str
    kind: str
    size: int
    solvable_count: int
    entries: List[SolvabilitySuiteEntry]


class SweepResult(BaseModel):
    """Stable fraction per perturbation kind and magnitude"""
    scenario: str
    tool_version: str
    kinds: List[str]
    grid: List[float] = Field(..., description="Increasing magnitudes L")
    fractions: Dict[str, List[float]]
    intervals: Dict[str, List[WilsonInterval]]
    threshold: float
    delta_emp: Optional[float] = None
    trials: int
    initial_states: int
    horizon: float
    seed: int
    growth_bound: float
    input_grid: Optional[List[float]] = Field(None, description="Input bounds delta for control sweeps")
    beta: Optional[float] = None

    @field_validator('grid')
    def validate_grid(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("grid must be strictly increasing")
        return v

    @field_validator('fractions')
    def validate_fractions(cls, v):
        for kind, values in v.items():
            if any(f < 0 or f > 1 for f in values):
                raise ValueError(f"fractions for {kind} must lie in [0, 1]")
        return v
