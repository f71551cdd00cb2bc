import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.analysis import exponents
from src.analysis.exponents import FrameState, IntervalLog, IntervalSeries
from src.dynamics import symdyn
from src.dynamics.flow import FrozenCoefficientPropagator, SwitchedPropagator
from src.dynamics.symdyn import SwitchPoint
from src.dynamics.systems import marcus_yamabe, triangular_decay
from src.errors import InsufficientSeries, NotTriangular
from src.kernels import matkit
from src.kernels.lie import MatrixFamily
from tests.conftest import random_upper_triangular


def constant_propagator(a, horizon=100, tau=0.0):
    fam = MatrixFamily.from_lists([a])
    return SwitchedPropagator(fam, SwitchPoint(symdyn.SymbolSeq((1,) * (horizon + 1), 1), tau))


def periodic_propagator(fam, pattern, length, tau=0.0):
    seq = symdyn.periodic_sequence(pattern, fam.size, length)
    return SwitchedPropagator(fam, SwitchPoint(seq, tau))


class TestFrameStep:
    def test_diagonal_unit_interval(self):
        a = np.diag([0.3, -1.2, 2.0])
        state = FrameState.initial(3)
        _, entry = exponents.frame_step(state, matkit.expm(a))
        assert_allclose(entry.logs, [0.3, -1.2, 2.0], atol=1e-12)

    def test_rotation_is_isometry(self):
        a = np.array([[0.0, 1.0], [-1.0, 0.0]])
        _, entry = exponents.frame_step(FrameState.initial(2), matkit.expm(a))
        assert_allclose(entry.logs, [0.0, 0.0], atol=1e-12)

    def test_logs_sum_to_log_det(self, rng):
        for _ in range(10):
            m = matkit.expm(rng.standard_normal((4, 4)))
            frame = exponents.random_frame(rng, 4)
            _, entry = exponents.frame_step(FrameState.initial(4, frame), m)
            assert np.sum(entry.logs) == pytest.approx(np.log(abs(np.linalg.det(m))), abs=1e-10)

    def test_frame_stays_orthonormal(self, rng):
        m = matkit.expm(0.3 * rng.standard_normal((3, 3)))
        state = FrameState.initial(3, exponents.random_frame(rng, 3))
        for _ in range(10_000):
            state, _ = exponents.frame_step(state, m)
        assert np.linalg.norm(state.q.T @ state.q - np.eye(3)) <= 1e-10
        assert state.elapsed == pytest.approx(10_000.0)

    def test_initial_frame_checked(self):
        with pytest.raises(ValueError):
            FrameState.initial(2, np.ones((2, 2)))
        with pytest.raises(ValueError):
            FrameState.initial(3, np.eye(2))


class TestLyapunovQr:
    def test_constant_diagonal(self):
        chi, series = exponents.lyapunov_qr(constant_propagator(np.diag([-1.0, -3.0])), 100.0)
        assert chi == pytest.approx(-1.0, abs=1e-8)
        assert len(series) == 100

    @pytest.mark.parametrize("horizon", [1.0, 5.0, 10.0, 20.0])
    def test_accumulated_logs_match_full_gram_schmidt(self, rng, fair, horizon):
        fam = MatrixFamily.from_lists([0.2 * rng.standard_normal((3, 3)), 0.2 * rng.standard_normal((3, 3))])
        prop = SwitchedPropagator(fam, symdyn.sample_switch_point(fair, horizon + 2.0, seed=5))
        frame = exponents.random_frame(rng, 3)
        _, series = exponents.lyapunov_qr(prop, horizon, frame)
        r = matkit.qr(prop.propagate(horizon) @ frame).r
        assert_allclose(series.accumulated()[-1], np.log(np.diag(r)), atol=1e-8)

    def test_birkhoff_max_is_chi(self, diag_pair, fair):
        prop = SwitchedPropagator(diag_pair, symdyn.sample_switch_point(fair, 300.0, seed=1))
        chi, series = exponents.lyapunov_qr(prop, 300.0)
        averages = exponents.birkhoff_coordinate_averages(series, 300.0)
        assert np.max(averages) == pytest.approx(chi, abs=1e-12)

    def test_series_horizon_and_tau(self, diag_pair):
        prop = periodic_propagator(diag_pair, [1, 2], 12, tau=0.25)
        _, series = exponents.lyapunov_qr(prop, 10.0)
        assert series.tau == 0.25
        assert series.lengths[0] == pytest.approx(0.75)
        assert series.horizon == pytest.approx(10.0)
        frame = series.to_frame()
        assert list(frame.columns[:2]) == ["t_end", "length"]
        assert len(frame) == len(series)

    def test_to_trajectory_starts_at_zero(self, diag_pair):
        _, series = exponents.lyapunov_qr(periodic_propagator(diag_pair, [1, 2], 12), 10.0)
        traj = series.to_trajectory()
        assert traj.times[0] == 0.0
        assert traj.log_norms[0] == 0.0
        assert traj.horizon == pytest.approx(10.0)

    @pytest.mark.slow
    def test_diag_family_closed_form(self, diag_pair, fair):
        chis = []
        for seed in range(20):
            prop = SwitchedPropagator(diag_pair, symdyn.sample_switch_point(fair, 2000.0, seed=seed))
            chis.append(exponents.lyapunov_qr(prop, 2000.0)[0])
        assert np.mean(chis) == pytest.approx(-0.5, abs=0.05)

    @pytest.mark.slow
    def test_marcus_yamabe_grows_despite_hurwitz_coefficients(self):
        prop = FrozenCoefficientPropagator(marcus_yamabe())
        chi, _ = exponents.lyapunov_qr(prop, 100.0)
        assert chi == pytest.approx(1.0, abs=0.05)


class TestThetaUpperTriangular:
    def test_constant(self):
        a = np.array([[-1.0, 4.0], [0.0, 0.5]])
        assert_allclose(exponents.theta_upper_triangular([(3.0, a)], 3.0), [-1.0, 0.5])

    def test_piecewise_pairs(self):
        pieces = [(1.0, np.diag([-2.0, 1.0])), (3.0, np.diag([2.0, -1.0]))]
        assert_allclose(exponents.theta_upper_triangular(pieces, 4.0), [1.0, -0.5])

    def test_rejects_lower_mass(self):
        with pytest.raises(NotTriangular):
            exponents.theta_upper_triangular([(1.0, np.array([[0.0, 0.0], [1.0, 0.0]]))], 1.0)

    def test_triangular_decay_exponent_vanishes(self):
        T = 1e4
        prop = FrozenCoefficientPropagator(triangular_decay(), dt=1e-2)
        theta = exponents.theta_upper_triangular(prop.coefficient_pieces(T), T)
        assert np.all(np.abs(theta) <= 1e-3)
        assert_allclose(theta, -np.log1p(T) / T, rtol=1e-3)

    @pytest.mark.parametrize("use_random_frame", [False, True])
    def test_matches_qr_on_random_triangular_system(self, rng, fair, use_random_frame):
        fam = MatrixFamily.from_lists([random_upper_triangular(rng, 3) for _ in range(2)])
        prop = SwitchedPropagator(fam, symdyn.sample_switch_point(fair, 500.0, seed=8))
        theta = exponents.theta_upper_triangular(prop.coefficient_pieces(500.0), 500.0)
        frame = exponents.random_frame(rng, 3) if use_random_frame else None
        chi, _ = exponents.lyapunov_qr(prop, 500.0, frame)
        assert abs(np.max(theta) - chi) <= 0.02


class TestLiao:
    def test_periodic_diag_windows(self, diag_pair):
        _, series = exponents.lyapunov_qr(periodic_propagator(diag_pair, [1, 2], 65), 64.0)
        assert exponents.liao_type_exponent(series, 0.0, 0, m=64) == pytest.approx(1.0)
        assert exponents.liao_type_exponent(series, 0.0, 1, m=32) == pytest.approx(-0.5)
        assert exponents.liao_type_exponent(series, 0.0, 1) == pytest.approx(-0.5)

    def test_constant_diagonal_every_ell(self):
        _, series = exponents.lyapunov_qr(constant_propagator(np.diag([-0.2, -3.0])), 64.0)
        for ell in range(5):
            assert exponents.liao_type_exponent(series, 0.0, ell) == pytest.approx(-0.2)

    def test_bounds_the_lyapunov_exponent(self, rng, fair):
        fam = MatrixFamily.from_lists([rng.standard_normal((2, 2)), rng.standard_normal((2, 2))])
        prop = SwitchedPropagator(fam, symdyn.sample_switch_point(fair, 200.0, seed=3))
        chi, series = exponents.lyapunov_qr(prop, 200.0)
        for ell in range(6):
            assert exponents.liao_type_exponent(series, series.tau, ell) >= chi - 1e-2

    def test_window_horizon_uses_tau(self):
        series = IntervalSeries.from_logs(
            [IntervalLog(np.array([0.5]), 0.5), IntervalLog(np.array([1.0]), 1.0)], tau=0.5)
        assert exponents.liao_type_exponent(series, 0.5, 0, m=2) == pytest.approx(1.5 / 1.5)

    def test_insufficient_series(self):
        series = IntervalSeries.from_logs([IntervalLog(np.array([1.0]), 1.0)] * 3)
        with pytest.raises(InsufficientSeries):
            exponents.liao_type_exponent(series, 0.0, 1, m=2)
        with pytest.raises(InsufficientSeries):
            IntervalSeries.from_logs([])
        with pytest.raises(ValueError):
            exponents.liao_type_exponent(series, 0.0, -1)

    def test_explicit_windows(self):
        series = IntervalSeries.from_logs([
            IntervalLog(np.array([1.0, -1.0]), 1.0),
            IntervalLog(np.array([-3.0, 2.0]), 1.0),
            IntervalLog(np.array([0.0, 0.5]), 1.0),
        ])
        assert exponents.liao_exponent_for_windows(series, [0, 2, 3]) == pytest.approx((1.0 + 0.5) / 3)
        with pytest.raises(ValueError):
            exponents.liao_exponent_for_windows(series, [1, 2])


def test_growth_bound_dominates_interval_rates(rng, fair):
    fam = MatrixFamily.from_lists([rng.standard_normal((3, 3)) for _ in range(2)])
    prop = SwitchedPropagator(fam, symdyn.sample_switch_point(fair, 50.0, seed=2))
    _, series = exponents.lyapunov_qr(prop, 50.0, exponents.random_frame(rng, 3))
    assert exponents.max_interval_rate(series) <= exponents.propagator_growth_bound(prop, 50.0)


def test_limsup_proxy_on_constant_system():
    _, series = exponents.lyapunov_qr(constant_propagator(np.diag([0.4, -1.0])), 50.0)
    assert exponents.limsup_proxy(series) == pytest.approx(0.4)
