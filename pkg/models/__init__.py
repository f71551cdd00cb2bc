#!/usr/bin/env python3
"""
Models package for switchstab configuration, scenarios and reports.
"""

from .config_models import (
    OutputFormat,
    SuiteKind,
    AnalysisConfig,
    SystemSpec,
    PerturbationGrid,
    ControlSpec,
    SuiteSpec,
    OutputSpec,
    Scenario
)
from .report_models import (
    VerdictClass,
    DichotomyOutcome,
    Verdict,
    WilsonInterval,
    SolvabilityReport,
    TriangularizationReport,
    ExponentReport,
    ExponentSummary,
    McReport,
    DichotomyReport,
    SuiteReport,
    SweepResult
)

__all__ = [
    "OutputFormat",
    "SuiteKind",
    "AnalysisConfig",
    "SystemSpec",
    "PerturbationGrid",
    "ControlSpec",
    "SuiteSpec",
    "OutputSpec",
    "Scenario",
    "VerdictClass",
    "DichotomyOutcome",
    "Verdict",
    "WilsonInterval",
    "SolvabilityReport",
    "TriangularizationReport",
    "ExponentReport",
    "ExponentSummary",
    "McReport",
    "DichotomyReport",
    "SuiteReport",
    "SweepResult"
]
