import numpy as np
import pytest

from models.config_models import AnalysisConfig, ControlSpec
from models.report_models import DichotomyOutcome, VerdictClass
from src.analysis import stability
from src.dynamics.flow import Trajectory
from src.dynamics.perturbations import PerturbationKind
from src.errors import GrowthBoundViolated, HorizonTooShort, MeanNotHurwitz, NotSolvable
from src.kernels.lie import MatrixFamily, ProbabilityVector


def make_trajectory(times, logs):
    times = np.asarray(times, dtype=float)
    return Trajectory(times, np.asarray(logs, dtype=float), 0, np.zeros(2))


class TestClassify:
    t = np.linspace(0.0, 1000.0, 2001)

    def test_decay_is_stable(self):
        verdict = stability.classify(make_trajectory(self.t, -self.t))
        assert verdict.verdict == VerdictClass.STABLE
        assert verdict.slope == pytest.approx(-1.0)

    def test_growth_is_unstable(self):
        verdict = stability.classify(make_trajectory(self.t, 0.1 * self.t))
        assert verdict.verdict == VerdictClass.UNSTABLE

    def test_bounded_oscillation_is_indeterminate(self):
        verdict = stability.classify(make_trajectory(self.t, np.sin(self.t)))
        assert verdict.verdict == VerdictClass.INDETERMINATE

    def test_band_edges(self):
        t = np.linspace(0.0, 100.0, 101)
        assert stability.classify(make_trajectory(t, -0.011 * t)).verdict == VerdictClass.STABLE
        assert stability.classify(make_trajectory(t, 0.011 * t)).verdict == VerdictClass.UNSTABLE
        assert stability.classify(make_trajectory(t, 0.005 * t)).verdict == VerdictClass.INDETERMINATE

    def test_scale_invariant(self):
        logs = -0.3 * self.t + np.sin(self.t)
        a = stability.classify(make_trajectory(self.t, logs))
        b = stability.classify(make_trajectory(self.t, logs + np.log(1e3)))
        assert a.verdict == b.verdict
        assert a.slope == pytest.approx(b.slope)

    def test_short_horizon_refused(self):
        t = np.linspace(0.0, 10.0, 11)
        with pytest.raises(HorizonTooShort):
            stability.classify(make_trajectory(t, -t))


def test_wilson_interval_edges():
    low = stability.wilson_interval(0, 20)
    high = stability.wilson_interval(20, 20)
    assert low.low == 0.0 and low.high < 0.2
    assert high.high == 1.0 and high.low > 0.8


def test_run_trials_keeps_order():
    assert stability.run_trials(lambda i: i * i, 10, threads=4) == [i * i for i in range(10)]
    assert stability.run_trials(lambda i: i, 3, threads=1) == [0, 1, 2]


def test_initial_states(rng):
    x0 = stability.initial_states(rng, 2, 8)
    assert x0.shape == (2, 8)
    np.testing.assert_allclose(np.linalg.norm(x0, axis=0), 1.0)
    np.testing.assert_allclose(x0[:, :4], [[1, -1, 0, 0], [0, 0, 1, -1]])


class TestMonteCarlo:
    def test_fair_diag_pair_is_stable(self, diag_pair, fair):
        report = stability.mc_stability(diag_pair, fair, 20, 500.0, seed=1)
        assert report.stable_fraction >= 0.95
        assert report.mean_exponent == pytest.approx(-0.5, abs=0.1)
        assert report.closed_form_chi == pytest.approx(-0.5)
        assert sum(report.histogram.counts) == 20

    def test_biased_diag_pair_is_unstable(self, diag_pair, biased):
        report = stability.mc_stability(diag_pair, biased, 20, 500.0, seed=1)
        assert report.stable_fraction <= 0.05
        assert report.mean_exponent == pytest.approx(0.7, abs=0.05)

    def test_single_hurwitz_matrix(self):
        fam = MatrixFamily.from_lists([[[-1.0, 2.0], [0.0, -3.0]]])
        report = stability.mc_stability(fam, ProbabilityVector((1.0,)), 20, 100.0, seed=0)
        assert report.stable_fraction == 1.0
        assert report.mean_exponent == pytest.approx(-1.0, abs=0.05)

    def test_thread_count_does_not_change_results(self, diag_pair, fair):
        one = stability.mc_stability(diag_pair, fair, 20, 100.0, seed=5, threads=1)
        many = stability.mc_stability(diag_pair, fair, 20, 100.0, seed=5, threads=4)
        assert one.model_dump() == many.model_dump()

    def test_random_frames(self, diag_pair, fair):
        report = stability.mc_stability(diag_pair, fair, 20, 300.0, seed=2, random_frames=True)
        assert report.stable_fraction >= 0.9

    def test_preconditions(self, diag_pair, fair):
        with pytest.raises(ValueError):
            stability.mc_stability(diag_pair, fair, 5, 100.0)
        with pytest.raises(HorizonTooShort):
            stability.mc_stability(diag_pair, fair, 20, 10.0)
        with pytest.raises(ValueError):
            stability.mc_stability(diag_pair, ProbabilityVector.uniform(3), 20, 100.0)

    @pytest.mark.slow
    def test_long_horizon_matches_closed_form(self, diag_pair, fair):
        report = stability.mc_stability(diag_pair, fair, 50, 2000.0, seed=7)
        assert report.stable_fraction >= 0.95
        assert report.mean_exponent == pytest.approx(-0.5, abs=0.05)


class TestDichotomy:
    def test_judge(self):
        assert stability.judge_dichotomy(True, -0.5, 1.0) == DichotomyOutcome.PASS
        assert stability.judge_dichotomy(False, 0.7, 0.0) == DichotomyOutcome.PASS
        assert stability.judge_dichotomy(True, -0.5, 0.5) == DichotomyOutcome.FAIL
        assert stability.judge_dichotomy(False, 0.05, 1.0) == DichotomyOutcome.MARGINAL

    def test_fair_pair_passes(self, diag_pair, fair):
        report = stability.dichotomy_check(diag_pair, fair, 20, 500.0, seed=3)
        assert report.mean_stable
        assert report.outcome == DichotomyOutcome.PASS

    def test_biased_pair_passes(self, diag_pair, biased):
        report = stability.dichotomy_check(diag_pair, biased, 20, 500.0, seed=3)
        assert not report.mean_stable
        assert report.outcome == DichotomyOutcome.PASS

    def test_zero_exponent_is_marginal(self, fair):
        fam = MatrixFamily.from_lists([np.diag([-1.0, 1.0]), np.diag([1.0, -1.0])])
        report = stability.dichotomy_check(fam, fair, 20, 100.0, seed=3)
        assert report.outcome == DichotomyOutcome.MARGINAL
        assert report.max_theta == pytest.approx(0.0, abs=1e-12)

    def test_non_solvable_refused(self, sl2_family, fair):
        with pytest.raises(NotSolvable):
            stability.dichotomy_check(sl2_family, fair, 20, 100.0)

    def test_random_frames_reach_monte_carlo(self, diag_pair, fair):
        report = stability.dichotomy_check(diag_pair, fair, 20, 300.0, seed=2, random_frames=True)
        direct = stability.mc_stability(diag_pair, fair, 20, 300.0, seed=2, random_frames=True)
        plain = stability.mc_stability(diag_pair, fair, 20, 300.0, seed=2)
        assert report.mc.exponents == direct.exponents
        assert report.mc.exponents != plain.exponents


class TestSweep:
    def test_refuses_unstable_mean(self, diag_pair, biased):
        with pytest.raises(MeanNotHurwitz):
            stability.perturbation_sweep(diag_pair, biased, [PerturbationKind.LINEAR_COUPLING],
                                         [0.0, 0.1], 2, 50.0)

    def test_rejects_bad_grid(self, diag_pair, fair):
        with pytest.raises(ValueError):
            stability.perturbation_sweep(diag_pair, fair, ["rotation"], [0.1, 0.0], 2, 50.0)
        with pytest.raises(ValueError):
            stability.perturbation_sweep(diag_pair, fair, [], [0.0], 2, 50.0)

    def test_result_shape_and_determinism(self, diag_pair, fair):
        kinds = [PerturbationKind.LINEAR_COUPLING, PerturbationKind.RANDOM_DIRECTION]
        first = stability.perturbation_sweep(diag_pair, fair, kinds, [0.0, 2.0], 3, 50.0, seed=4, threads=1)
        second = stability.perturbation_sweep(diag_pair, fair, kinds, [0.0, 2.0], 3, 50.0, seed=4, threads=3)
        assert first.model_dump_json() == second.model_dump_json()
        assert first.kinds == ["linear-coupling", "random-direction"]
        assert all(len(v) == 2 for v in first.fractions.values())
        # L = 2 dominates every decay rate of the pair
        assert first.fractions["linear-coupling"][1] == 0.0

    def test_fractions_non_increasing_in_coupling(self, diag_pair, fair):
        grid = [0.0, 0.1, 0.3, 0.6, 1.0]
        result = stability.perturbation_sweep(diag_pair, fair, [PerturbationKind.LINEAR_COUPLING],
                                              grid, 4, 400.0, seed=2)
        fractions = result.fractions["linear-coupling"]
        assert all(a >= b for a, b in zip(fractions, fractions[1:]))
        assert fractions[0] == 1.0
        # the two coordinate rates sum to -1 + 2L, so one of them is >= L - 0.5
        assert fractions[-2:] == [0.0, 0.0]

    def test_zero_magnitude_column_matches_monte_carlo(self, diag_pair, fair):
        config = AnalysisConfig(min_trials=4)
        kinds = [PerturbationKind.LINEAR_COUPLING, PerturbationKind.ROTATION]
        result = stability.perturbation_sweep(diag_pair, fair, kinds, [0.0, 0.5], 4, 400.0,
                                              seed=3, config=config)
        mc = stability.mc_stability(diag_pair, fair, 4, 400.0, seed=3, config=config)
        for kind in result.kinds:
            assert result.fractions[kind][0] == mc.stable_fraction

    @pytest.mark.slow
    def test_small_magnitudes_stay_stable(self, diag_pair, fair):
        result = stability.perturbation_sweep(diag_pair, fair, [PerturbationKind.LINEAR_COUPLING],
                                              [0.0, 0.05, 0.1], 20, 500.0, seed=7)
        assert result.delta_emp is not None
        assert result.delta_emp >= 0.05


class TestControlProduct:
    def test_oversized_directions_refused(self, diag_pair, fair):
        control = ControlSpec(beta=1.0, directions=[[[2.0, 0.0], [0.0, 2.0]]] * 2, delta_grid=[0.0, 0.1])
        with pytest.raises(GrowthBoundViolated):
            stability.control_product_experiment(diag_pair, fair, control, 2, 50.0)

    def test_records_input_grid(self, diag_pair, fair):
        control = ControlSpec(beta=2.0, delta_grid=[0.0, 0.01])
        result = stability.control_product_experiment(diag_pair, fair, control, 2, 50.0, seed=1)
        assert result.input_grid == [0.0, 0.01]
        assert result.grid == [0.0, 0.02]
        assert result.beta == 2.0
        assert result.kinds == ["control-product"]

    @pytest.mark.slow
    def test_small_inputs_stay_stable(self, diag_pair, fair):
        control = ControlSpec(beta=1.0, delta_grid=[0.0, 0.05])
        result = stability.control_product_experiment(diag_pair, fair, control, 20, 500.0, seed=7)
        assert result.fractions["control-product"][1] >= 0.9
