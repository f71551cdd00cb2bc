#!/usr/bin/env python3
"""
Exponent estimators.

Lyapunov exponents by QR re-orthonormalization of a moving frame, the
time-averaged real diagonal of upper-triangular systems, per-coordinate
Birkhoff averages and windowed Liao-type exponents built from the same
per-interval frame logs.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.dynamics.flow import BasePropagator, SwitchedPropagator, Trajectory
from src.errors import InsufficientSeries, NotTriangular
from src.kernels import matkit
from src.kernels.lie import MatrixFamily

logger = logging.getLogger(__name__)

TRIANGULAR_TOL = 1e-9
FRAME_RANK_TOL = 1e-300
GROWTH_MARGIN = 1e-6


@dataclass(frozen=True)
class FrameState:
    """Orthonormal frame q, accumulated per-coordinate logs and elapsed time"""
    q: np.ndarray
    logs: np.ndarray
    elapsed: float = 0.0

    @classmethod
    def initial(cls, n: int, frame: Optional[np.ndarray] = None) -> "FrameState":
        q = np.eye(n) if frame is None else np.asarray(frame, dtype=float)
        if q.shape != (n, n):
            raise ValueError(f"Frame must be {n}x{n}, got {q.shape}")
        if np.linalg.norm(q.T @ q - np.eye(n)) > 1e-10:
            raise ValueError("Initial frame must be orthonormal")
        return cls(q, np.zeros(n), 0.0)


class IntervalLog(NamedTuple):
    """Per-coordinate integrals of the frame growth rates over one interval"""
    logs: np.ndarray
    length: float


@dataclass(frozen=True)
class IntervalSeries:
    """Stacked interval logs: logs (K, n) and interval lengths (K,)"""
    logs: np.ndarray
    lengths: np.ndarray
    tau: float = 0.0

    @classmethod
    def from_logs(cls, entries: Sequence[IntervalLog], tau: float = 0.0) -> "IntervalSeries":
        if not entries:
            raise InsufficientSeries("Interval series is empty")
        return cls(np.vstack([e.logs for e in entries]), np.array([e.length for e in entries]), tau)

    def __len__(self) -> int:
        return self.lengths.size

    @property
    def n(self) -> int:
        return self.logs.shape[1]

    @property
    def ends(self) -> np.ndarray:
        """Interval end times T_1, T_2, ..."""
        return np.cumsum(self.lengths)

    @property
    def horizon(self) -> float:
        return float(np.sum(self.lengths))

    def accumulated(self) -> np.ndarray:
        """Cumulative logs (K, n) at the interval ends"""
        return np.cumsum(self.logs, axis=0)

    def to_trajectory(self) -> Trajectory:
        """Top-coordinate cumulative log as a log-norm history (starting at 0)"""
        times = np.concatenate([[0.0], self.ends])
        top = np.concatenate([[0.0], np.max(self.accumulated(), axis=1)])
        return Trajectory(times, top, 0, np.zeros(self.n))

    def to_frame(self) -> pd.DataFrame:
        """One row per interval for CSV export"""
        data = {"t_end": self.ends, "length": self.lengths}
        for j in range(self.n):
            data[f"log_{j + 1}"] = self.logs[:, j]
        for j in range(self.n):
            data[f"accumulated_{j + 1}"] = self.accumulated()[:, j]
        return pd.DataFrame(data)


def random_frame(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed orthonormal frame"""
    return matkit.qr(rng.standard_normal((n, n))).q


def frame_step(state: FrameState, propagator: np.ndarray, length: float = 1.0) -> Tuple[FrameState, IntervalLog]:
    """QR of M q: the new frame and the log R-diagonal over the interval"""
    q, r = matkit.qr(propagator @ state.q, FRAME_RANK_TOL)
    logs = np.log(np.real(np.diagonal(r)))
    return FrameState(q, state.logs + logs, state.elapsed + length), IntervalLog(logs, length)


def lyapunov_qr(prop: BasePropagator, T: float,
                frame: Optional[np.ndarray] = None) -> Tuple[float, IntervalSeries]:
    """chi_plus = max_k (accumulated log_k) / T over all intervals up to T"""
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    state = FrameState.initial(prop.n, frame)
    entries: List[IntervalLog] = []
    for piece in prop.intervals(T):
        state, entry = frame_step(state, piece.propagator, piece.length)
        entries.append(entry)
    tau = prop.point.tau if isinstance(prop, SwitchedPropagator) else 0.0
    series = IntervalSeries.from_logs(entries, tau)
    chi = float(np.max(state.logs) / T)
    logger.debug(f"QR exponents over {len(series)} intervals: chi_plus = {chi:.6f}")
    return chi, series


PieceSource = Union[Iterable[Tuple[np.ndarray, np.ndarray]], Iterable[Tuple[float, np.ndarray]]]


def _chunks(pieces: PieceSource) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
    for lengths, mats in pieces:
        mats = np.asarray(mats)
        if mats.ndim == 2:
            yield np.atleast_1d(np.asarray(lengths, dtype=float)), mats[None]
        else:
            yield np.asarray(lengths, dtype=float), mats


def theta_upper_triangular(pieces: PieceSource, T: float, tol: float = TRIANGULAR_TOL) -> np.ndarray:
    """
    theta_i = (1/T) int_0^T Re c_ii(t) dt for piecewise-constant c.

    Accepts (length, matrix) pairs or (lengths, stacked matrices) chunks such
    as BasePropagator.coefficient_pieces produces.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    total: Optional[np.ndarray] = None
    covered = 0.0
    for lengths, mats in _chunks(pieces):
        lower = np.tril(np.abs(mats), -1)
        scale = max(1.0, float(np.max(np.abs(mats))))
        if np.max(lower) > tol * scale:
            raise NotTriangular(f"Sub-diagonal mass {np.max(lower):.3e} exceeds {tol * scale:.3e}")
        contribution = lengths @ np.real(np.diagonal(mats, axis1=1, axis2=2))
        total = contribution if total is None else total + contribution
        covered += float(np.sum(lengths))
    if total is None:
        raise ValueError("No coefficient pieces supplied")
    if abs(covered - T) > 1e-9 * max(1.0, T):
        logger.warning(f"Coefficient pieces cover {covered:.6g}, averaging over T = {T:.6g}")
    return total / T


def birkhoff_coordinate_averages(series: IntervalSeries, T: Optional[float] = None) -> np.ndarray:
    """Per-coordinate time averages (accumulated log_k) / T"""
    horizon = series.horizon if T is None else T
    return np.sum(series.logs, axis=0) / horizon


def liao_exponent_for_windows(series: IntervalSeries, boundaries: Sequence[int]) -> float:
    """
    (1 / T_{k_m}) sum_i max_j (window-i sum of coordinate j) for windows
    [k_i, k_{i+1}) given by integer interval boundaries 0 = k_0 < k_1 < ...
    """
    b = np.asarray(boundaries, dtype=int)
    if b.size < 2 or b[0] != 0 or np.any(np.diff(b) <= 0):
        raise ValueError(f"Window boundaries must start at 0 and increase, got {list(boundaries)}")
    if b[-1] > len(series):
        raise InsufficientSeries(f"Windows need {b[-1]} intervals, series has {len(series)}")
    window_sums = np.add.reduceat(series.logs[: b[-1]], b[:-1], axis=0)
    elapsed = float(np.sum(series.lengths[: b[-1]]))
    return float(np.sum(np.max(window_sums, axis=1)) / elapsed)


def liao_type_exponent(series: IntervalSeries, tau: float, ell: int, m: Optional[int] = None) -> float:
    """
    Liao-type exponent with dyadic windows of 2^ell intervals.

    With m given, exactly m windows are used and the horizon is T_{m 2^ell} =
    m 2^ell - tau. Without m, the windows cover the whole series and the last
    one may be shorter.
    """
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    width = 2 ** ell
    if m is None:
        boundaries = list(range(0, len(series), width)) + [len(series)]
        return liao_exponent_for_windows(series, boundaries)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if m * width > len(series):
        raise InsufficientSeries(f"{m} windows of {width} need {m * width} intervals, series has {len(series)}")
    window_sums = series.logs[: m * width].reshape(m, width, series.n).sum(axis=1)
    return float(np.sum(np.max(window_sums, axis=1)) / (m * width - tau))


def limsup_proxy(series: IntervalSeries) -> float:
    """Largest running top-coordinate average over the final half of the horizon"""
    ends = series.ends
    running = np.max(series.accumulated(), axis=1) / ends
    tail = ends >= 0.5 * series.horizon
    return float(np.max(running[tail]))


def growth_bound(fam: MatrixFamily, margin: float = GROWTH_MARGIN) -> float:
    """C = n max_i ||A_i|| + margin bounds every per-interval |log| / length"""
    return fam.n * fam.max_norm() + margin


def propagator_growth_bound(prop: BasePropagator, T: float, margin: float = GROWTH_MARGIN) -> float:
    """growth_bound for any propagator, from its coefficients on [0, T]"""
    if isinstance(prop, SwitchedPropagator):
        return growth_bound(prop.fam, margin)
    worst = 0.0
    for _, mats in prop.coefficient_pieces(T):
        worst = max(worst, float(np.max(np.linalg.norm(mats, ord=2, axis=(1, 2)))))
    return prop.n * worst + margin


def max_interval_rate(series: IntervalSeries) -> float:
    """max |log_j| / length over all intervals"""
    return float(np.max(np.abs(series.logs) / series.lengths[:, None]))
