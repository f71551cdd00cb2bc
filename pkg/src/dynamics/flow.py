#!/usr/bin/env python3
"""
Trajectory engines.

Propagators produce the principal matrix of the switched linear system as a
product of per-interval matrix exponentials; the fixed-step integrator
advances the perturbed quasilinear system with RK4 steps aligned to the
switching times.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterator, List, NamedTuple, Optional

import numpy as np

from src.dynamics.perturbations import BasePerturbation, NoPerturbation
from src.dynamics.symdyn import SwitchPoint, suspension_advance
from src.dynamics.systems import TimeVaryingSystem
from src.errors import InputError, NonFinite
from src.kernels import matkit
from src.kernels.lie import MatrixFamily

MAX_DT = 0.01
FROZEN_DT = 1e-3
UNIT_BATCH = 32
RESCALE_LOW = 1e-150
RESCALE_HIGH = 1e150


class Piece(NamedTuple):
    """One switching interval [start, end] in t-coordinates"""
    start: float
    end: float
    symbol: Optional[int]
    propagator: np.ndarray

    @property
    def length(self) -> float:
        return self.end - self.start


class Segment(NamedTuple):
    """Integration segment with its coefficient map t -> A(t)"""
    start: float
    end: float
    symbol: Optional[int]
    coefficient: Callable[[float], np.ndarray]


@dataclass
class Trajectory:
    """Sampled log-norm history of one solution"""
    times: np.ndarray
    log_norms: np.ndarray
    rescale_count: int
    direction: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.log_norms.shape:
            raise ValueError("times and log_norms must have equal length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")
        if not np.all(np.isfinite(self.log_norms)):
            raise NonFinite("Trajectory log-norms must be finite")

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    def state_exponent(self) -> float:
        """(log||x(T)|| - log||x(0)||) / T"""
        if self.horizon <= 0:
            raise ValueError("Trajectory has zero horizon")
        return float((self.log_norms[-1] - self.log_norms[0]) / self.horizon)


class BasePropagator(ABC):
    """Abstract base class for principal-matrix engines"""

    def __init__(self):
        self.logger = logging.getLogger(self.__class__.__name__)

    @property
    @abstractmethod
    def n(self) -> int:
        """State dimension"""
        pass

    @property
    @abstractmethod
    def horizon(self) -> float:
        """Largest time the propagator is defined up to"""
        pass

    @property
    def n_symbols(self) -> int:
        return 1

    @abstractmethod
    def intervals(self, T: float) -> Iterator[Piece]:
        """Pieces covering [0, T] in order, each with its exact propagator"""
        pass

    @abstractmethod
    def segments(self, T: float) -> Iterator[Segment]:
        """Pieces covering [0, T] with coefficient maps, for integration"""
        pass

    @abstractmethod
    def coefficient_pieces(self, T: float) -> Iterator[tuple]:
        """(lengths (K,), coefficients (K, n, n)) chunks, piecewise constant"""
        pass

    def _check_time(self, t: float) -> None:
        if t < 0:
            raise ValueError(f"Time must be >= 0, got {t}")

    def propagate(self, t: float) -> np.ndarray:
        """Principal matrix Phi(t) with Phi(0) = I"""
        self._check_time(t)
        phi = np.eye(self.n)
        for piece in self.intervals(t):
            phi = piece.propagator @ phi
        return phi


class SwitchedPropagator(BasePropagator):
    """
    Principal matrix of x' = A_sigma(tau + t) x for a point [seq, tau].

    Piece k spans (k - 1 - tau, k - tau] clipped to [0, T]; full unit pieces
    reuse cached exponentials of the family.
    """

    def __init__(self, fam: MatrixFamily, point: SwitchPoint, unit_exponentials: Optional[np.ndarray] = None):
        super().__init__()
        if point.seq.n_symbols != fam.size:
            raise ValueError(
                f"Sequence alphabet {point.seq.n_symbols} does not match family size {fam.size}"
            )
        self.fam = fam
        self.point = point
        self._stacked = fam.stacked()
        self._unit = unit_exponentials if unit_exponentials is not None else matkit.expm(self._stacked)

    @property
    def n(self) -> int:
        return self.fam.n

    @property
    def horizon(self) -> float:
        return self.point.horizon()

    @property
    def n_symbols(self) -> int:
        return self.fam.size

    def advanced(self, t: float) -> "SwitchedPropagator":
        """Propagator based at the semiflow image of the point after time t"""
        return SwitchedPropagator(self.fam, suspension_advance(self.point, t), self._unit)

    def _bounds(self, T: float) -> Iterator[tuple]:
        self._check_time(T)
        tau = self.point.tau
        u_end = tau + T
        last = max(1, math.ceil(u_end))
        self.point.seq.require(last)
        for k in range(1, last + 1):
            lo = max(float(k - 1), tau)
            hi = min(float(k), u_end)
            if hi <= lo:
                continue
            full = lo == k - 1 and hi == k
            yield lo - tau, hi - tau, self.point.seq[k - 1], full

    def intervals(self, T: float) -> Iterator[Piece]:
        for start, end, symbol, full in self._bounds(T):
            if full:
                m = self._unit[symbol - 1]
            else:
                m = matkit.expm((end - start) * self._stacked[symbol - 1])
            yield Piece(start, end, symbol, m)

    def segments(self, T: float) -> Iterator[Segment]:
        for start, end, symbol, _ in self._bounds(T):
            a = self._stacked[symbol - 1]
            yield Segment(start, end, symbol, lambda t, a=a: a)

    def coefficient_pieces(self, T: float) -> Iterator[tuple]:
        bounds = list(self._bounds(T))
        if not bounds:
            return
        lengths = np.array([end - start for start, end, _, _ in bounds])
        symbols = np.array([symbol for _, _, symbol, _ in bounds])
        yield lengths, self._stacked[symbols - 1]


class FrozenCoefficientPropagator(BasePropagator):
    """
    Principal matrix of a time-varying x' = A(t) x.

    Unit intervals [k-1, k] are split into substeps of length dt with the
    coefficient frozen at each substep midpoint.
    """

    def __init__(self, system: TimeVaryingSystem, dt: float = FROZEN_DT, horizon: float = math.inf):
        super().__init__()
        if not 0 < dt <= 1.0:
            raise ValueError(f"Frozen-coefficient dt must lie in (0, 1], got {dt}")
        self.system = system
        self.dt = dt
        self._horizon = horizon

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def horizon(self) -> float:
        return self._horizon

    def _grid(self, start: float, end: float) -> np.ndarray:
        steps = max(1, math.ceil((end - start) / self.dt - 1e-9))
        return np.linspace(start, end, steps + 1)

    def _unit_bounds(self, T: float) -> Iterator[tuple]:
        self._check_time(T)
        if T > self._horizon:
            raise ValueError(f"Requested time {T} beyond horizon {self._horizon}")
        k = 0
        while k < T:
            yield float(k), float(min(k + 1, T))
            k += 1

    def _unit_products(self, grids: np.ndarray) -> np.ndarray:
        """Ordered product of the substep exponentials for each row of grids"""
        h = np.diff(grids, axis=1)
        mids = 0.5 * (grids[:, 1:] + grids[:, :-1])
        units, substeps = h.shape
        coeffs = self.system.coefficients(mids.reshape(-1))
        steps = matkit.expm_taylor(h.reshape(-1)[:, None, None] * coeffs)
        steps = steps.reshape(units, substeps, self.n, self.n)
        # pairwise reduction, later substeps on the left
        while steps.shape[1] > 1:
            if steps.shape[1] % 2:
                pad = np.broadcast_to(np.eye(self.n), (units, 1, self.n, self.n))
                steps = np.concatenate([steps, pad], axis=1)
            steps = steps[:, 1::2] @ steps[:, 0::2]
        return steps[:, 0]

    def intervals(self, T: float) -> Iterator[Piece]:
        bounds = list(self._unit_bounds(T))
        for lo in range(0, len(bounds), UNIT_BATCH):
            batch = bounds[lo:lo + UNIT_BATCH]
            grids = [self._grid(start, end) for start, end in batch]
            if len({g.size for g in grids}) == 1:
                products = self._unit_products(np.stack(grids))
            else:
                products = np.concatenate([self._unit_products(g[None, :]) for g in grids])
            for (start, end), m in zip(batch, products):
                yield Piece(start, end, None, m)

    def segments(self, T: float) -> Iterator[Segment]:
        for start, end in self._unit_bounds(T):
            yield Segment(start, end, None, self.system.at)

    def coefficient_pieces(self, T: float, chunk: float = 1000.0) -> Iterator[tuple]:
        if not T > 0:
            raise InputError(f"Averaging horizon must be positive, got {T}")
        if T > self._horizon:
            raise InputError(f"Requested time {T} beyond horizon {self._horizon}")
        start = 0.0
        while start < T:
            end = min(start + chunk, T)
            grid = self._grid(start, end)
            mids = 0.5 * (grid[1:] + grid[:-1])
            yield np.diff(grid), self.system.coefficients(mids)
            start = end


def cocycle_check(prop: SwitchedPropagator, t1: float, t2: float) -> float:
    """||Phi(t1 + t2) - Phi_shifted(t2) Phi(t1)||"""
    whole = prop.propagate(t1 + t2)
    split = prop.advanced(t1).propagate(t2) @ prop.propagate(t1)
    return float(np.linalg.norm(whole - split))


# ------------------------------------------------------------ integration

def _rk4_step(segment: Segment, pert: BasePerturbation, x: np.ndarray, t: float, h: float) -> np.ndarray:
    def rhs(tt: float, xx: np.ndarray) -> np.ndarray:
        return segment.coefficient(tt) @ xx + pert.evaluate(xx, tt, segment.symbol)

    k1 = rhs(t, x)
    k2 = rhs(t + h / 2, x + h / 2 * k1)
    k3 = rhs(t + h / 2, x + h / 2 * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_batch(prop: BasePropagator, pert: Optional[BasePerturbation], x0: np.ndarray,
                    T: float, dt: float = MAX_DT) -> List[Trajectory]:
    """
    Fixed-step RK4 for each column of x0 (shape (n, k)).

    Steps inside each switching interval are equal and at most dt, so every
    switching time is hit exactly. Columns leaving [1e-150, 1e150] in norm are
    renormalized with the log accumulated. Samples are recorded at t = 0, at
    each interval end and at T.
    """
    if not 0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt}")
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    x = np.array(x0, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    if n != prop.n:
        raise ValueError(f"Initial states have dimension {n}, propagator {prop.n}")
    norms = np.linalg.norm(x, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ValueError("Initial states must be finite and non-zero")
    pert = pert if pert is not None else NoPerturbation(0.0)
    pert.reset(n, k, prop.n_symbols)

    log_scale = np.log(norms)
    x = x / norms
    rescales = np.zeros(k, dtype=int)
    times = [0.0]
    logs = [log_scale.copy()]

    for segment in prop.segments(T):
        span = segment.end - segment.start
        steps = max(1, math.ceil(span / dt - 1e-9))
        h = span / steps
        for i in range(steps):
            t = segment.start + i * h
            pert.advance(t)
            x = _rk4_step(segment, pert, x, t, h)
            norms = np.linalg.norm(x, axis=0)
            if not np.all(np.isfinite(norms)):
                raise NonFinite(f"State became non-finite at t = {t + h:.6g}")
            out = (norms < RESCALE_LOW) | (norms > RESCALE_HIGH)
            if np.any(out):
                if np.any(norms[out] == 0):
                    raise NonFinite(f"State collapsed to zero at t = {t + h:.6g}")
                log_scale[out] += np.log(norms[out])
                x[:, out] /= norms[out]
                rescales[out] += 1
        times.append(segment.end)
        logs.append(log_scale + np.log(np.linalg.norm(x, axis=0)))

    times_arr = np.asarray(times)
    log_arr = np.vstack(logs)
    directions = x / np.linalg.norm(x, axis=0)
    return [Trajectory(times_arr.copy(), log_arr[:, j].copy(), int(rescales[j]), directions[:, j].copy())
            for j in range(k)]


def integrate_perturbed(prop: BasePropagator, pert: Optional[BasePerturbation], x0: np.ndarray,
                        T: float, dt: float = MAX_DT) -> Trajectory:
    """Single-state version of integrate_batch"""
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise ValueError(f"x0 must be a vector, got shape {x0.shape}")
    return integrate_batch(prop, pert, x0[:, None], T, dt)[0]
