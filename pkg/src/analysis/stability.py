#!/usr/bin/env python3
"""
Stability experiments and verdicts.

Monte-Carlo estimates of almost-sure stability, the check that the mean
system's Hurwitz property agrees with them, and robustness sweeps over
perturbation magnitudes. Trials run in a thread pool and are reduced in
trial-index order, so results never depend on the thread count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import scipy.stats

from models.config_models import AnalysisConfig, ControlSpec
from models.report_models import (
    DichotomyOutcome,
    DichotomyReport,
    Histogram,
    McReport,
    SweepResult,
    Verdict,
    VerdictClass,
    WilsonInterval,
)
from src import __version__
from src.analysis.exponents import growth_bound, lyapunov_qr, random_frame
from src.dynamics.flow import SwitchedPropagator, Trajectory, integrate_batch
from src.dynamics.perturbations import ControlProduct, PerturbationKind, make_perturbation
from src.dynamics.symdyn import sample_switch_point, trial_rng
from src.errors import HorizonTooShort, MeanNotHurwitz, NotSolvable, NumericalBreakdown
from src.kernels import matkit
from src.kernels.lie import (
    MatrixFamily,
    ProbabilityVector,
    closed_form_exponents,
    convex_mean_stable,
    is_solvable,
    simultaneous_triangularize,
)

logger = logging.getLogger(__name__)

R = TypeVar("R")


def run_trials(fn: Callable[[int], R], trials: int, threads: Optional[int] = None) -> List[R]:
    """Map fn over trial indices; results in index order"""
    if threads == 1 or trials == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def wilson_interval(successes: int, trials: int) -> WilsonInterval:
    """95% Wilson score interval"""
    ci = scipy.stats.binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return WilsonInterval(low=float(max(ci.low, 0.0)), high=float(min(ci.high, 1.0)))


def classify(traj: Trajectory, band: float = 0.01, min_horizon: float = 50.0) -> Verdict:
    """Least-squares slope of log||x(t)|| over the final half of the horizon"""
    if traj.horizon < min_horizon:
        raise HorizonTooShort(f"Horizon {traj.horizon:.6g} below the minimum {min_horizon:.6g}")
    start = traj.times[0] + 0.5 * traj.horizon
    tail = traj.times >= start
    if np.count_nonzero(tail) < 2:
        tail = np.zeros_like(tail)
        tail[-2:] = True
    slope = float(np.polyfit(traj.times[tail], traj.log_norms[tail], 1)[0])
    if slope <= -band:
        verdict = VerdictClass.STABLE
    elif slope >= band:
        verdict = VerdictClass.UNSTABLE
    else:
        verdict = VerdictClass.INDETERMINATE
    return Verdict(verdict=verdict, slope=slope, band=band)


def closed_form_for(fam: MatrixFamily, alpha: ProbabilityVector,
                    config: Optional[AnalysisConfig] = None) -> Tuple[Optional[np.ndarray], Optional[float]]:
    """Closed-form exponents when the family is solvable, else (None, None)"""
    config = config or AnalysisConfig.get_default_config()
    solvable, _ = is_solvable(fam)
    if not solvable:
        return None, None
    try:
        tri = simultaneous_triangularize(fam, config.eigenspace_tol)
    except NumericalBreakdown as e:
        logger.warning(f"Closed form unavailable: {e}")
        return None, None
    theta, chi = closed_form_exponents(tri, alpha)
    return theta, chi


# ---------------------------------------------------------- Monte-Carlo

@dataclass(frozen=True)
class _TrialOutcome:
    exponent: float
    verdict: VerdictClass


def mc_stability(fam: MatrixFamily, alpha: ProbabilityVector, trials: int, T: float, seed: int = 0,
                 config: Optional[AnalysisConfig] = None, threads: Optional[int] = None,
                 random_frames: bool = False) -> McReport:
    """Fraction of sampled signals whose QR exponent classifies as Stable"""
    config = config or AnalysisConfig.get_default_config()
    if trials < config.min_trials:
        raise ValueError(f"trials must be >= {config.min_trials}, got {trials}")
    if T < config.min_horizon:
        raise HorizonTooShort(f"Horizon {T} below the minimum {config.min_horizon}")
    if len(alpha) != fam.size:
        raise ValueError(f"alpha has {len(alpha)} entries for {fam.size} matrices")
    unit = matkit.expm(fam.stacked())

    def trial(i: int) -> _TrialOutcome:
        rng = trial_rng(seed, i)
        point = sample_switch_point(alpha, T, rng=rng)
        frame = random_frame(rng, fam.n) if random_frames else None
        chi, series = lyapunov_qr(SwitchedPropagator(fam, point, unit), T, frame)
        verdict = classify(series.to_trajectory(), config.verdict_band, config.min_horizon)
        logger.debug(f"Trial {i}: tau={point.tau:.4f} chi={chi:.5f} {verdict.verdict.value}")
        return _TrialOutcome(chi, verdict.verdict)

    logger.info(f"Monte-Carlo: {trials} trials, T={T}, seed={seed}")
    outcomes = run_trials(trial, trials, threads)
    exponents = np.array([o.exponent for o in outcomes])
    counts = {v: sum(o.verdict == v for o in outcomes) for v in VerdictClass}
    edges_counts, edges = np.histogram(exponents, bins=min(20, trials))
    theta, chi = closed_form_for(fam, alpha, config)
    stable = counts[VerdictClass.STABLE]
    report = McReport(
        trials=trials,
        horizon=T,
        seed=seed,
        stable=stable,
        unstable=counts[VerdictClass.UNSTABLE],
        indeterminate=counts[VerdictClass.INDETERMINATE],
        stable_fraction=stable / trials,
        stable_interval=wilson_interval(stable, trials),
        mean_exponent=float(np.mean(exponents)),
        std_exponent=float(np.std(exponents)),
        exponents=exponents.tolist(),
        histogram=Histogram(edges=edges.tolist(), counts=edges_counts.tolist()),
        closed_form_theta=theta.tolist() if theta is not None else None,
        closed_form_chi=chi,
    )
    logger.info(f"Stable fraction {report.stable_fraction:.3f}, mean exponent {report.mean_exponent:.4f}")
    return report


def judge_dichotomy(mean_stable: bool, max_theta: float, stable_fraction: float,
                    config: Optional[AnalysisConfig] = None) -> DichotomyOutcome:
    """PASS when the Hurwitz verdict matches the almost-sure verdict"""
    config = config or AnalysisConfig.get_default_config()
    if abs(max_theta) < config.marginal_band:
        return DichotomyOutcome.MARGINAL
    if mean_stable and stable_fraction >= config.stable_threshold:
        return DichotomyOutcome.PASS
    if not mean_stable and stable_fraction <= config.unstable_threshold:
        return DichotomyOutcome.PASS
    return DichotomyOutcome.FAIL


def dichotomy_check(fam: MatrixFamily, alpha: ProbabilityVector, trials: int, T: float, seed: int = 0,
                    config: Optional[AnalysisConfig] = None, threads: Optional[int] = None,
                    random_frames: bool = False) -> DichotomyReport:
    """Mean-system Hurwitz test against the Monte-Carlo stable fraction (solvable families)"""
    config = config or AnalysisConfig.get_default_config()
    solvable, _ = is_solvable(fam)
    if not solvable:
        raise NotSolvable("The dichotomy check needs a solvable family")
    tri = simultaneous_triangularize(fam, config.eigenspace_tol)
    _, max_theta = closed_form_exponents(tri, alpha)
    mean_stable = convex_mean_stable(fam, alpha)
    mc = mc_stability(fam, alpha, trials, T, seed, config, threads, random_frames)
    outcome = judge_dichotomy(mean_stable, max_theta, mc.stable_fraction, config)
    if outcome == DichotomyOutcome.MARGINAL:
        logger.warning(f"max theta = {max_theta:.4f} lies in the marginal band; not judged")
    elif outcome == DichotomyOutcome.FAIL:
        logger.warning(f"Dichotomy FAIL: mean stable={mean_stable}, stable fraction={mc.stable_fraction:.3f}")
    return DichotomyReport(mean_stable=mean_stable, max_theta=max_theta, outcome=outcome, mc=mc)


# ------------------------------------------------------------- sweeps

def initial_states(rng: np.random.Generator, n: int, count: int = 8) -> np.ndarray:
    """+-e_j for j < min(n, 4), padded with random unit vectors; shape (n, count)"""
    columns = []
    for j in range(min(n, 4)):
        for sign in (1.0, -1.0):
            e = np.zeros(n)
            e[j] = sign
            columns.append(e)
    columns = columns[:count]
    while len(columns) < count:
        v = rng.standard_normal(n)
        columns.append(v / np.linalg.norm(v))
    return np.column_stack(columns)


def perturbation_sweep(fam: MatrixFamily, alpha: ProbabilityVector, kinds: Sequence[PerturbationKind],
                       grid: Sequence[float], trials: int, T: float, seed: int = 0,
                       dt: float = 0.01, config: Optional[AnalysisConfig] = None,
                       threads: Optional[int] = None, scenario: str = "",
                       options: Optional[Dict[PerturbationKind, dict]] = None) -> SweepResult:
    """
    Stable fraction for every (kind, L) cell.

    A trial is stable at L when all its initial states classify as Stable.
    delta_emp is the largest L whose fraction reaches the sweep threshold for
    every kind.
    """
    config = config or AnalysisConfig.get_default_config()
    kinds = [PerturbationKind(k) for k in kinds]
    grid_arr = np.asarray(grid, dtype=float)
    if not kinds:
        raise ValueError("At least one perturbation kind is required")
    if grid_arr.size == 0 or np.any(grid_arr < 0) or np.any(np.diff(grid_arr) <= 0):
        raise ValueError(f"grid must be non-empty, non-negative and increasing, got {list(grid)}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if T < config.min_horizon:
        raise HorizonTooShort(f"Horizon {T} below the minimum {config.min_horizon}")
    if not convex_mean_stable(fam, alpha):
        raise MeanNotHurwitz(
            "The mean matrix sum alpha_k A_k is not Hurwitz; the robustness sweep would be vacuous"
        )
    options = options or {}
    unit = matkit.expm(fam.stacked())
    count = config.initial_states
    magnitudes = np.repeat(grid_arr, count)

    def trial(i: int) -> np.ndarray:
        rng = trial_rng(seed, i)
        point = sample_switch_point(alpha, T, rng=rng)
        x0 = np.tile(initial_states(rng, fam.n, count), (1, grid_arr.size))
        prop = SwitchedPropagator(fam, point, unit)
        stable = np.zeros((len(kinds), grid_arr.size), dtype=bool)
        for k, kind in enumerate(kinds):
            pert = make_perturbation(kind, magnitudes, trial_rng(seed, i, k + 1), **options.get(kind, {}))
            trajectories = integrate_batch(prop, pert, x0, T, dt)
            verdicts = np.array([
                classify(traj, config.verdict_band, config.min_horizon).verdict == VerdictClass.STABLE
                for traj in trajectories
            ]).reshape(grid_arr.size, count)
            stable[k] = np.all(verdicts, axis=1)
        logger.debug(f"Sweep trial {i}: stable cells {stable.sum()}/{stable.size}")
        return stable

    logger.info(f"Sweep: kinds={[k.value for k in kinds]}, {grid_arr.size} magnitudes, {trials} trials, T={T}")
    cells = np.stack(run_trials(trial, trials, threads))  # (trials, kinds, grid)
    successes = cells.sum(axis=0)
    fractions = successes / trials
    passing = np.all(fractions >= config.sweep_threshold, axis=0)
    delta_emp = float(grid_arr[passing][-1]) if np.any(passing) else None
    logger.info(f"Sweep finished: delta_emp = {delta_emp}")
    return SweepResult(
        scenario=scenario,
        tool_version=__version__,
        kinds=[k.value for k in kinds],
        grid=grid_arr.tolist(),
        fractions={k.value: fractions[j].tolist() for j, k in enumerate(kinds)},
        intervals={k.value: [wilson_interval(int(s), trials) for s in successes[j]] for j, k in enumerate(kinds)},
        threshold=config.sweep_threshold,
        delta_emp=delta_emp,
        trials=trials,
        initial_states=count,
        horizon=T,
        seed=seed,
        growth_bound=growth_bound(fam, config.growth_margin),
    )


def control_product_experiment(fam: MatrixFamily, alpha: ProbabilityVector, control: ControlSpec,
                               trials: int, T: float, seed: int = 0,
                               config: Optional[AnalysisConfig] = None, threads: Optional[int] = None,
                               scenario: str = "") -> SweepResult:
    """Sweep over input bounds delta with f_i = B_i(x) u(t), L = beta delta"""
    config = config or AnalysisConfig.get_default_config()
    directions = [np.asarray(g, dtype=float) for g in control.directions] if control.directions else None
    if directions is not None and any(g.shape[0] != fam.n for g in directions):
        raise ValueError(f"control directions must have {fam.n} rows")
    sample_control = ControlProduct(1.0, trial_rng(seed, 0, 0), beta=control.beta, mode=control.mode,
                                    directions=directions)
    worst = sample_control.validate_growth_bound(fam.n, fam.size)
    logger.info(f"Sampled growth ratio {worst:.4f} within beta = {control.beta}")
    delta = np.asarray(control.delta_grid, dtype=float)
    result = perturbation_sweep(
        fam, alpha, [PerturbationKind.CONTROL_PRODUCT], control.beta * delta, trials, T, seed,
        control.dt, config, threads, scenario,
        options={PerturbationKind.CONTROL_PRODUCT: {"beta": control.beta, "mode": control.mode,
                                                     "directions": directions}},
    )
    return result.model_copy(update={"input_grid": delta.tolist(), "beta": control.beta})
