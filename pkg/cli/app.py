#!/usr/bin/env python3
"""
Command handlers: one method per subcommand, each loading a scenario,
driving the analysis modules and writing reports.
"""

import logging
import math
import os
import sys
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

sys.path.append(str(Path(__file__).parent.parent))

from models.config_models import AnalysisConfig, OutputFormat, Scenario, SuiteKind
from models.report_models import (
    ComplexMatrix,
    ExponentReport,
    ExponentSummary,
    McRunReport,
    SolvabilityReport,
    SolvabilitySuiteReport,
    SuiteReport,
    SweepResult,
    TriangularizationReport,
)
from src import __version__
from src.analysis.exponents import (
    IntervalSeries,
    birkhoff_coordinate_averages,
    liao_type_exponent,
    limsup_proxy,
    lyapunov_qr,
    max_interval_rate,
    propagator_growth_bound,
    random_frame,
    theta_upper_triangular,
)
from src.analysis.stability import (
    closed_form_for,
    control_product_experiment,
    dichotomy_check,
    mc_stability,
    perturbation_sweep,
    run_trials,
)
from src.analysis.suites import dichotomy_suite, solvability_suite
from src.config.config_manager import ConfigManager
from src.dynamics.flow import BasePropagator, FrozenCoefficientPropagator, SwitchedPropagator
from src.dynamics.perturbations import PerturbationKind
from src.dynamics.symdyn import SwitchPoint, periodic_sequence, sample_switch_point, trial_rng
from src.io.exporters import ReportExporter
from src.kernels import matkit
from src.kernels.lie import (
    MatrixFamily,
    Triangularization,
    closed_form_exponents,
    convex_mean_stable,
    generate_lie_algebra,
    derived_series,
    is_solvable,
    simultaneous_triangularize,
    stabilizing_alpha,
)


def _complex_matrix(m: np.ndarray) -> ComplexMatrix:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return ComplexMatrix(real=np.real(m).tolist(), imag=np.imag(m).tolist())


class App:
    """Drives one analysis command per call"""

    def __init__(self, config_manager: Optional[ConfigManager] = None, seed: Optional[int] = None,
                 threads: Optional[int] = None, out_dir: Optional[str] = None,
                 fmt: Optional[OutputFormat] = None, horizon: Optional[float] = None,
                 trials: Optional[int] = None, echo: Callable[[str], None] = print):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.config_manager = config_manager or ConfigManager()
        self.config: AnalysisConfig = self.config_manager.get_config()
        self.seed = seed
        self.threads = threads or self.config.threads or os.cpu_count() or 1
        self.out_dir = out_dir
        self.fmt = fmt
        self.horizon = horizon
        self.trials = trials
        self.echo = echo

    # ------------------------------------------------------------ helpers

    def load(self, ref: str) -> Scenario:
        """Load a scenario and apply command-line overrides"""
        scenario = self.config_manager.load_scenario(ref)
        update = {}
        if self.seed is not None:
            update["seed"] = self.seed
        if self.horizon is not None:
            update["horizon"] = self.horizon
        if self.trials is not None:
            update["trials"] = self.trials
        return scenario.model_copy(update=update) if update else scenario

    def exporter(self, scenario: Scenario) -> ReportExporter:
        out = self.out_dir or scenario.outputs.directory or "reports"
        fmt = self.fmt or scenario.outputs.format
        return ReportExporter(Path(out), fmt)

    def _family(self, scenario: Scenario, command: str) -> MatrixFamily:
        if scenario.family is None:
            raise ValueError(f"{command} needs a scenario with a matrix family")
        return scenario.to_family()

    def _ells(self, scenario: Scenario) -> List[int]:
        return scenario.ells if scenario.ells is not None else self.config.ells

    # ------------------------------------------------------ check-solvable

    def check_solvable(self, ref: str) -> int:
        """Derived series, solvability verdict and triangularization diagnostics"""
        scenario = self.load(ref)
        if scenario.suite is not None:
            return self._check_solvable_suite(scenario)
        fam = self._family(scenario, "check-solvable")
        alpha = scenario.to_alpha(fam.size)
        basis = generate_lie_algebra(fam)
        dims = derived_series(basis)
        solvable, ell = is_solvable(fam)
        mean = fam.mean(alpha)
        certificate = matkit.lyapunov_certificate(mean)

        tri_report = None
        best_alpha, margin = None, None
        if solvable:
            tri = simultaneous_triangularize(fam, self.config.eigenspace_tol)
            tri_report = self._triangularization_report(tri, alpha)
            best, margin = stabilizing_alpha(tri)
            best_alpha = list(best.alpha) if best is not None else None

        report = SolvabilityReport(
            scenario=scenario.name,
            tool_version=__version__,
            n=fam.n,
            n_symbols=fam.size,
            lie_dimension=basis.dim,
            bracket_depth=basis.depth,
            derived_series=dims,
            solvable=solvable,
            ell=ell,
            mean_hurwitz=convex_mean_stable(fam, alpha),
            mean_spectral_abscissa=matkit.spectral_abscissa(mean),
            lyapunov_min_eigenvalue=certificate.min_eigenvalue if math.isfinite(certificate.min_eigenvalue) else None,
            triangularization=tri_report,
            stabilizing_alpha=best_alpha,
            stabilizing_margin=margin if margin is not None and math.isfinite(margin) else None,
        )
        self.echo(f"derived series: {dims}")
        self.echo(f"solvable: {'true' if solvable else 'false'}" + (f", ell={ell}" if solvable else ""))
        if tri_report is not None:
            self.echo(f"lower defect: {tri_report.lower_defect:.3e}")
            self.echo(f"closed-form theta: {np.round(tri_report.theta, 6).tolist()}, chi = {tri_report.chi:.6f}")
        self.echo(f"mean Hurwitz: {'true' if report.mean_hurwitz else 'false'}")
        self.exporter(scenario).write_json(f"{scenario.name}-check-solvable", report)
        return 0

    def _check_solvable_suite(self, scenario: Scenario) -> int:
        suite = scenario.suite
        entries = solvability_suite(suite.size, suite.n, suite.n_symbols, scenario.seed,
                                    sl2=suite.kind == SuiteKind.SL2)
        count = sum(e.solvable for e in entries)
        report = SolvabilitySuiteReport(
            scenario=scenario.name,
            tool_version=__version__,
            kind=suite.kind.value,
            size=suite.size,
            solvable_count=count,
            entries=entries,
        )
        self.echo(f"solvable: {count}/{suite.size} ({suite.kind.value} suite)")
        self.exporter(scenario).write_json(f"{scenario.name}-check-solvable", report)
        return 0

    # -------------------------------------------------------- triangularize

    def _triangularization_report(self, tri: Triangularization, alpha) -> TriangularizationReport:
        theta, chi = closed_form_exponents(tri, alpha)
        return TriangularizationReport(
            t=_complex_matrix(tri.t),
            diagonals=[_complex_matrix(d[None, :]) for d in tri.diag],
            lower_defect=tri.lower_defect(),
            theta=theta.tolist(),
            chi=chi,
        )

    def triangularize(self, ref: str) -> int:
        """Simultaneous triangularization of a solvable family"""
        scenario = self.load(ref)
        fam = self._family(scenario, "triangularize")
        alpha = scenario.to_alpha(fam.size)
        tri = simultaneous_triangularize(fam, self.config.eigenspace_tol)
        report = self._triangularization_report(tri, alpha)
        for i, d in enumerate(tri.diag):
            self.echo(f"A_{i + 1} diagonal: {np.round(d, 6).tolist()}")
        self.echo(f"lower defect: {report.lower_defect:.3e}")
        exporter = self.exporter(scenario)
        exporter.write_json(f"{scenario.name}-triangularize", report)
        rows = {"matrix": [], "index": [], "real": [], "imag": []}
        for i, d in enumerate(tri.diag):
            for k, value in enumerate(d):
                rows["matrix"].append(i + 1)
                rows["index"].append(k + 1)
                rows["real"].append(float(np.real(value)))
                rows["imag"].append(float(np.imag(value)))
        exporter.write_frame(f"{scenario.name}-diagonals", pd.DataFrame(rows))
        return 0

    # ------------------------------------------------------------ exponents

    def _exponent_report(self, prop: BasePropagator, T: float, trial: int, ells: List[int],
                         frame: Optional[np.ndarray]) -> tuple:
        chi, series = lyapunov_qr(prop, T, frame)
        chi_star = {str(ell): liao_type_exponent(series, series.tau, ell) for ell in ells}
        report = ExponentReport(
            trial=trial,
            tau=series.tau,
            horizon=T,
            chi_plus=chi,
            theta=birkhoff_coordinate_averages(series, T).tolist(),
            chi_star=chi_star,
            window_lengths={str(ell): 2 ** ell for ell in ells},
            windows={str(ell): math.ceil(len(series) / 2 ** ell) for ell in ells},
            limsup_proxy=limsup_proxy(series),
            growth_bound=propagator_growth_bound(prop, T, self.config.growth_margin),
            max_interval_rate=max_interval_rate(series),
        )
        if report.max_interval_rate > report.growth_bound:
            self.logger.warning(
                f"Interval rate {report.max_interval_rate:.4f} exceeds growth bound {report.growth_bound:.4f}"
            )
        if not report.liao_bound_holds():
            self.logger.warning(f"Trial {trial}: chi_star below chi_plus - 1e-2")
        return report, series

    def exponents(self, ref: str) -> int:
        """QR Lyapunov, Birkhoff and Liao-type exponents"""
        scenario = self.load(ref)
        T = scenario.horizon
        ells = self._ells(scenario)
        closed_theta, closed_chi = None, None

        if scenario.system is not None:
            system = scenario.to_system()
            prop = FrozenCoefficientPropagator(system, self.config.frozen_dt, horizon=T)
            results = [self._exponent_report(prop, T, 0, ells, None)]
            if system.upper_triangular:
                theta = theta_upper_triangular(prop.coefficient_pieces(T), T)
                closed_theta, closed_chi = theta.tolist(), float(np.max(theta))
        else:
            fam = self._family(scenario, "exponents")
            alpha = scenario.to_alpha(fam.size)
            unit = matkit.expm(fam.stacked())
            theta, chi = closed_form_for(fam, alpha, self.config)
            if theta is not None:
                closed_theta, closed_chi = theta.tolist(), chi

            def trial(i: int) -> tuple:
                rng = trial_rng(scenario.seed, i)
                if scenario.signal is not None:
                    tau = scenario.tau or 0.0
                    seq = periodic_sequence(scenario.signal, fam.size, math.ceil(tau + T) + 1)
                    point = SwitchPoint(seq, tau)
                else:
                    point = sample_switch_point(alpha, T, rng=rng)
                frame = random_frame(rng, fam.n) if scenario.random_frame else None
                return self._exponent_report(SwitchedPropagator(fam, point, unit), T, i, ells, frame)

            results = run_trials(trial, scenario.trials, self.threads)

        reports = [r.model_copy(update={"closed_form_theta": closed_theta, "closed_form_chi": closed_chi})
                   for r, _ in results]
        chis = np.array([r.chi_plus for r in reports])
        summary = ExponentSummary(
            scenario=scenario.name,
            tool_version=__version__,
            seed=scenario.seed,
            trials=len(reports),
            horizon=T,
            mean_chi_plus=float(np.mean(chis)),
            std_chi_plus=float(np.std(chis)),
            mean_chi_star={k: float(np.mean([r.chi_star[k] for r in reports])) for k in reports[0].chi_star},
            closed_form_theta=closed_theta,
            closed_form_chi=closed_chi,
            reports=reports,
        )
        self.echo(f"chi = {summary.mean_chi_plus:.6f} (mean over {summary.trials} signals)")
        self.echo(f"theta = {np.round(reports[0].theta, 6).tolist()}")
        if closed_chi is not None:
            self.echo(f"closed-form chi = {closed_chi:.6f}, theta = {np.round(closed_theta, 6).tolist()}")
        for ell, value in summary.mean_chi_star.items():
            self.echo(f"chi_star[ell={ell}] = {value:.6f}")

        exporter = self.exporter(scenario)
        exporter.write_json(f"{scenario.name}-exponents", summary)
        first_series: IntervalSeries = results[0][1]
        exporter.write_frame(f"{scenario.name}-windows", first_series.to_frame())
        exporter.write_trajectory(f"{scenario.name}-trajectory", first_series.to_trajectory())
        return 0

    # ------------------------------------------------------------------ mc

    def mc(self, ref: str) -> int:
        """Monte-Carlo stability; dichotomy check for solvable families and suites"""
        scenario = self.load(ref)
        if scenario.suite is not None:
            return self._mc_suite(scenario)
        fam = self._family(scenario, "mc")
        alpha = scenario.to_alpha(fam.size)
        solvable, _ = is_solvable(fam)
        dichotomy = None
        if solvable:
            dichotomy = dichotomy_check(fam, alpha, scenario.trials, scenario.horizon, scenario.seed,
                                        self.config, self.threads, scenario.random_frame)
            mc = dichotomy.mc
        else:
            mc = mc_stability(fam, alpha, scenario.trials, scenario.horizon, scenario.seed,
                              self.config, self.threads, scenario.random_frame)
        report = McRunReport(
            scenario=scenario.name,
            tool_version=__version__,
            mean_stable=convex_mean_stable(fam, alpha),
            dichotomy=dichotomy,
            mc=mc,
        )
        low, high = mc.stable_interval.low, mc.stable_interval.high
        self.echo(f"stable fraction: {mc.stable_fraction:.3f} [{low:.3f}, {high:.3f}] over {mc.trials} signals")
        self.echo(f"mean exponent: {mc.mean_exponent:.6f}")
        if mc.closed_form_chi is not None:
            self.echo(f"closed-form chi: {mc.closed_form_chi:.6f}")
        if dichotomy is not None:
            self.echo(f"dichotomy: {dichotomy.outcome.value}")
        exporter = self.exporter(scenario)
        exporter.write_json(f"{scenario.name}-mc", report)
        exporter.write_mc(f"{scenario.name}-mc", mc)
        return 0

    def _mc_suite(self, scenario: Scenario) -> int:
        suite = scenario.suite
        if suite.kind != SuiteKind.SOLVABLE:
            raise ValueError("mc suites need solvable families")
        report: SuiteReport = dichotomy_suite(suite.size, suite.n, suite.n_symbols, scenario.trials,
                                              scenario.horizon, scenario.seed, self.config, self.threads,
                                              scenario.name)
        self.echo(f"PASS {report.passed}/{report.size}, {report.marginal} marginal")
        self.echo(f"max |mean exponent - closed form|: {report.max_exponent_error:.4f}")
        exporter = self.exporter(scenario)
        exporter.write_json(f"{scenario.name}-mc", report)
        exporter.write_frame(f"{scenario.name}-suite", pd.DataFrame([e.model_dump(mode="json") for e in report.entries]))
        return 0

    # --------------------------------------------------------------- sweeps

    def _write_sweep(self, scenario: Scenario, result: SweepResult, stem: str) -> None:
        if result.delta_emp is not None:
            self.echo(f"delta_emp = {result.delta_emp:g} (threshold {result.threshold:g})")
        else:
            self.echo(f"delta_emp: none (no magnitude reached threshold {result.threshold:g})")
        self.echo(f"growth bound C = {result.growth_bound:.6f}")
        exporter = self.exporter(scenario)
        exporter.write_json(stem, result)
        exporter.write_sweep(stem, result)

    def sweep(self, ref: str) -> int:
        """Robustness sweep over perturbation kinds and magnitudes"""
        scenario = self.load(ref)
        fam = self._family(scenario, "sweep")
        alpha = scenario.to_alpha(fam.size)
        grid = scenario.perturbation
        options = {PerturbationKind.ROTATION: {"omega": grid.omega}}
        result = perturbation_sweep(fam, alpha, grid.kinds, grid.grid, scenario.trials, scenario.horizon,
                                    scenario.seed, grid.dt, self.config, self.threads, scenario.name, options)
        self._write_sweep(scenario, result, f"{scenario.name}-sweep")
        return 0

    def control_sweep(self, ref: str) -> int:
        """Sweep over input bounds for the control-product perturbation"""
        scenario = self.load(ref)
        fam = self._family(scenario, "control-sweep")
        if scenario.control is None:
            raise ValueError("control-sweep needs a scenario with a 'control' section")
        alpha = scenario.to_alpha(fam.size)
        result = control_product_experiment(fam, alpha, scenario.control, scenario.trials, scenario.horizon,
                                            scenario.seed, self.config, self.threads, scenario.name)
        self._write_sweep(scenario, result, f"{scenario.name}-control-sweep")
        return 0
