#!/usr/bin/env python3
"""
Generated family suites with known ground truth.

Solvable families are built by conjugating random upper-triangular matrices
with one well-conditioned transform; non-solvable families contain a
conjugated copy of sl(2).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from models.config_models import AnalysisConfig
from models.report_models import SolvabilitySuiteEntry, SuiteEntry, SuiteReport
from src import __version__
from src.analysis.stability import judge_dichotomy, mc_stability
from src.dynamics.symdyn import derived_seed, trial_rng
from src.kernels.lie import (
    MatrixFamily,
    ProbabilityVector,
    closed_form_exponents,
    convex_mean_stable,
    derived_series,
    generate_lie_algebra,
    is_solvable,
    simultaneous_triangularize,
)

logger = logging.getLogger(__name__)

DIAGONAL_RANGE = (-1.5, 1.0)
ALPHA_FLOOR = 0.05


@dataclass(frozen=True)
class GeneratedFamily:
    """Family A_i = T0^-1 U_i T0 with its triangular ground truth"""
    family: MatrixFamily
    triangulars: Tuple[np.ndarray, ...]
    transform: np.ndarray

    def diagonals(self) -> List[np.ndarray]:
        return [np.diagonal(u).copy() for u in self.triangulars]


def well_conditioned(rng: np.random.Generator, n: int, spread: float = 3.0) -> np.ndarray:
    """Q1 diag(s) Q2 with singular values in [1, spread]"""
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q1 @ np.diag(rng.uniform(1.0, spread, n)) @ q2


def random_solvable_family(rng: np.random.Generator, n: int, n_symbols: int,
                           diagonal_range: Tuple[float, float] = DIAGONAL_RANGE) -> GeneratedFamily:
    """Conjugated random upper-triangular family"""
    t0 = well_conditioned(rng, n)
    t0_inv = np.linalg.inv(t0)
    triangulars = []
    for _ in range(n_symbols):
        u = np.triu(0.5 * rng.standard_normal((n, n)), 1)
        u[np.diag_indices(n)] = rng.uniform(*diagonal_range, n)
        triangulars.append(u)
    mats = tuple(t0_inv @ u @ t0 for u in triangulars)
    return GeneratedFamily(MatrixFamily(mats), tuple(triangulars), t0)


def random_sl2_family(rng: np.random.Generator, n: int, extra: int = 1) -> MatrixFamily:
    """E, F embedded in the leading 2x2 block, conjugated, plus random extras"""
    if n < 2:
        raise ValueError(f"sl(2) needs n >= 2, got {n}")
    e = np.zeros((n, n))
    f = np.zeros((n, n))
    e[0, 1] = 1.0
    f[1, 0] = 1.0
    t0 = well_conditioned(rng, n)
    t0_inv = np.linalg.inv(t0)
    mats = [t0_inv @ e @ t0, t0_inv @ f @ t0]
    mats.extend(rng.standard_normal((n, n)) for _ in range(extra))
    return MatrixFamily(tuple(mats))


def random_alpha(rng: np.random.Generator, size: int, floor: float = ALPHA_FLOOR) -> ProbabilityVector:
    """Dirichlet(1) weights kept above a floor"""
    w = np.maximum(rng.dirichlet(np.ones(size)), floor)
    w = w / w.sum()
    w[-1] = 1.0 - float(np.sum(w[:-1]))
    return ProbabilityVector(tuple(w))


def dichotomy_suite(size: int, n: int, n_symbols: int, trials: int, T: float, seed: int = 0,
                    config: Optional[AnalysisConfig] = None, threads: Optional[int] = None,
                    scenario: str = "solvable-suite") -> SuiteReport:
    """Closed form against Monte-Carlo on generated solvable families"""
    config = config or AnalysisConfig.get_default_config()
    entries = []
    for index in range(size):
        rng = trial_rng(seed, index, 1)
        generated = random_solvable_family(rng, n, n_symbols)
        alpha = random_alpha(rng, n_symbols)
        tri = simultaneous_triangularize(generated.family, config.eigenspace_tol)
        _, max_theta = closed_form_exponents(tri, alpha)
        mean_stable = convex_mean_stable(generated.family, alpha)
        mc = mc_stability(generated.family, alpha, trials, T, derived_seed(seed, index), config, threads)
        outcome = judge_dichotomy(mean_stable, max_theta, mc.stable_fraction, config)
        entries.append(SuiteEntry(
            index=index,
            n=n,
            max_theta=max_theta,
            mean_exponent=mc.mean_exponent,
            exponent_error=abs(mc.mean_exponent - max_theta),
            outcome=outcome,
            stable_fraction=mc.stable_fraction,
        ))
        logger.info(f"Family {index}: max theta {max_theta:+.4f}, mean exponent {mc.mean_exponent:+.4f}, {outcome.value}")
    outcomes = [e.outcome.value for e in entries]
    return SuiteReport(
        scenario=scenario,
        tool_version=__version__,
        size=size,
        passed=outcomes.count("PASS"),
        failed=outcomes.count("FAIL"),
        marginal=outcomes.count("MARGINAL"),
        max_exponent_error=max(e.exponent_error for e in entries),
        entries=entries,
    )


def solvability_suite(size: int, n: int, n_symbols: int, seed: int = 0, sl2: bool = False) -> List[SolvabilitySuiteEntry]:
    """Classifier verdicts on generated solvable or sl(2)-containing families"""
    entries = []
    for index in range(size):
        rng = trial_rng(seed, index, 2)
        fam = random_sl2_family(rng, n) if sl2 else random_solvable_family(rng, n, n_symbols).family
        solvable, _ = is_solvable(fam)
        entries.append(SolvabilitySuiteEntry(
            index=index,
            solvable=solvable,
            derived_series=derived_series(generate_lie_algebra(fam)),
        ))
    return entries
