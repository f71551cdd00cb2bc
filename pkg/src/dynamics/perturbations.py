#!/usr/bin/env python3
"""
Perturbation terms f(x, t) for the quasilinear switched system
x' = A_sigma(t) x + f_sigma(t)(x, t).

Every perturbation satisfies ||f(x, t)|| <= L ||x|| by construction and is
positively homogeneous in x, so integrators may rescale the state freely.
Perturbations operate column-wise on a batch X of shape (n, k) with one
magnitude per column.
"""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from src.dynamics.symdyn import trial_rng
from src.errors import GrowthBoundViolated

GROWTH_SLACK = 1e-9


class PerturbationKind(str, Enum):
    """Perturbation menu"""
    NONE = "none"
    LINEAR_COUPLING = "linear-coupling"
    ROTATION = "rotation"
    RANDOM_DIRECTION = "random-direction"
    CONTROL_PRODUCT = "control-product"


class ControlMode(str, Enum):
    """Shape of the control matrix B(x)"""
    NORM_DIRECTION = "norm-direction"
    STATE_DIAGONAL = "state-diagonal"


def _unit_columns(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    e = rng.standard_normal((n, k))
    return e / np.linalg.norm(e, axis=0, keepdims=True)


class BasePerturbation(ABC):
    """Abstract base class for perturbation terms"""

    def __init__(self, magnitude, rng: Optional[np.random.Generator] = None):
        self.magnitude = np.atleast_1d(np.asarray(magnitude, dtype=float))
        if np.any(self.magnitude < 0) or not np.all(np.isfinite(self.magnitude)):
            raise ValueError(f"Perturbation magnitude must be finite and >= 0, got {self.magnitude}")
        self.rng = rng if rng is not None else trial_rng(0)
        self.logger = logging.getLogger(self.__class__.__name__)

    @property
    @abstractmethod
    def kind(self) -> PerturbationKind:
        """Menu entry implemented by this class"""
        pass

    def reset(self, n: int, k: int, n_symbols: int = 1) -> None:
        """Prepare per-run state for a batch of k columns in R^n"""
        if self.magnitude.size not in (1, k):
            raise ValueError(f"{self.magnitude.size} magnitudes for a batch of {k} columns")

    def advance(self, t: float) -> None:
        """Per-step hook; inputs drawn here stay constant over the step"""
        pass

    @abstractmethod
    def evaluate(self, x: np.ndarray, t: float, symbol: Optional[int]) -> np.ndarray:
        """f(x, t) for the active symbol, same shape as x"""
        pass

    def growth_ratio(self, x: np.ndarray, t: float = 0.0, symbol: Optional[int] = None) -> np.ndarray:
        """||f(x, t)|| / ||x|| per column"""
        return np.linalg.norm(self.evaluate(x, t, symbol), axis=0) / np.linalg.norm(x, axis=0)


class NoPerturbation(BasePerturbation):
    """f = 0"""

    @property
    def kind(self) -> PerturbationKind:
        return PerturbationKind.NONE

    def evaluate(self, x: np.ndarray, t: float, symbol: Optional[int]) -> np.ndarray:
        return np.zeros_like(x)


class LinearCoupling(BasePerturbation):
    """f = L x"""

    @property
    def kind(self) -> PerturbationKind:
        return PerturbationKind.LINEAR_COUPLING

    def evaluate(self, x: np.ndarray, t: float, symbol: Optional[int]) -> np.ndarray:
        return self.magnitude * x


class Rotation(BasePerturbation):
    """f = L R(t) x, R(t) rotating coordinate pairs (0,1), (2,3), ... by omega t"""

    def __init__(self, magnitude, rng: Optional[np.random.Generator] = None, omega: float = 1.0):
        super().__init__(magnitude, rng)
        self.omega = omega

    @property
    def kind(self) -> PerturbationKind:
        return PerturbationKind.ROTATION

    def evaluate(self, x: np.ndarray, t: float, symbol: Optional[int]) -> np.ndarray:
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        out = x.copy()
        pairs = x.shape[0] // 2
        even, odd = x[0:2 * pairs:2], x[1:2 * pairs:2]
        out[0:2 * pairs:2] = c * even - s * odd
        out[1:2 * pairs:2] = s * even + c * odd
        return self.magnitude * out


class RandomDirection(BasePerturbation):
    """f = L ||x|| e(t), e(t) a fresh random unit vector each step"""

    def reset(self, n: int, k: int, n_symbols: int = 1) -> None:
        super().reset(n, k, n_symbols)
        self._shape = (n, k)
        self._direction = _unit_columns(self.rng, n, k)

    def advance(self, t: float) -> None:
        self._direction = _unit_columns(self.rng, *self._shape)

    @property
    def kind(self) -> PerturbationKind:
        return PerturbationKind.RANDOM_DIRECTION

    def evaluate(self, x: np.ndarray, t: float, symbol: Optional[int]) -> np.ndarray:
        return self.magnitude * np.linalg.norm(x, axis=0) * self._direction


class ControlProduct(BasePerturbation):
    """
    f = B_i(x) u(t) with ||B_i(x)|| <= beta ||x|| and ||u|| = delta = L / beta.

    norm-direction: B_i(x) = beta ||x|| G_i with ||G_i||_2 <= 1, G_i either
    supplied per symbol or drawn at reset.
    state-diagonal: B_i(x) = beta diag(|x|).
    u is piecewise constant per step with a random direction.
    """

    def __init__(self, magnitude, rng: Optional[np.random.Generator] = None, beta: float = 1.0,
                 mode: ControlMode = ControlMode.NORM_DIRECTION,
                 directions: Optional[Sequence[np.ndarray]] = None):
        super().__init__(magnitude, rng)
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        self.beta = beta
        self.mode = ControlMode(mode)
        self.directions: Optional[List[np.ndarray]] = (
            [np.asarray(g, dtype=float) for g in directions] if directions is not None else None
        )

    @property
    def kind(self) -> PerturbationKind:
        return PerturbationKind.CONTROL_PRODUCT

    @property
    def input_bound(self) -> np.ndarray:
        return self.magnitude / self.beta

    def reset(self, n: int, k: int, n_symbols: int = 1) -> None:
        super().reset(n, k, n_symbols)
        if self.directions is None:
            drawn = []
            for _ in range(n_symbols):
                g = self.rng.standard_normal((n, n))
                drawn.append(g / np.linalg.norm(g, 2))
            self._g = drawn
        else:
            self._g = self.directions
        self._m = self._g[0].shape[1] if self.mode == ControlMode.NORM_DIRECTION else n
        self._k = k
        self._u = _unit_columns(self.rng, self._m, k)

    def advance(self, t: float) -> None:
        self._u = _unit_columns(self.rng, self._m, self._k)

    def _direction(self, symbol: Optional[int]) -> np.ndarray:
        index = 0 if symbol is None else (symbol - 1) % len(self._g)
        return self._g[index]

    def evaluate(self, x: np.ndarray, t: float, symbol: Optional[int]) -> np.ndarray:
        u = self.input_bound * self._u
        if self.mode == ControlMode.STATE_DIAGONAL:
            return self.beta * np.abs(x) * u
        return self.beta * np.linalg.norm(x, axis=0) * (self._direction(symbol) @ u)

    def control_matrix(self, x: np.ndarray, symbol: Optional[int] = None) -> np.ndarray:
        """B_i(x) for a single state vector"""
        if self.mode == ControlMode.STATE_DIAGONAL:
            return self.beta * np.diag(np.abs(x))
        return self.beta * np.linalg.norm(x) * self._direction(symbol)

    def validate_growth_bound(self, n: int, n_symbols: int = 1, samples: int = 200) -> float:
        """Largest sampled ||B_i(x)|| / ||x||; raises when it exceeds beta"""
        self.reset(n, self.magnitude.size, n_symbols)
        worst = 0.0
        for _ in range(samples):
            x = self.rng.standard_normal(n)
            for symbol in range(1, n_symbols + 1):
                ratio = float(np.linalg.norm(self.control_matrix(x, symbol), 2) / np.linalg.norm(x))
                worst = max(worst, ratio)
        if worst > self.beta * (1.0 + GROWTH_SLACK):
            raise GrowthBoundViolated(
                f"Sampled ||B(x)||/||x|| = {worst:.6g} exceeds declared bound beta = {self.beta}"
            )
        self.logger.debug(f"Growth bound check passed: max ratio {worst:.6g} <= beta {self.beta}")
        return worst


def make_perturbation(kind, magnitude, rng: Optional[np.random.Generator] = None,
                      **options) -> BasePerturbation:
    """Build a perturbation of the given kind"""
    kind = PerturbationKind(kind)
    if kind == PerturbationKind.NONE:
        return NoPerturbation(magnitude, rng)
    if kind == PerturbationKind.LINEAR_COUPLING:
        return LinearCoupling(magnitude, rng)
    if kind == PerturbationKind.ROTATION:
        return Rotation(magnitude, rng, **options)
    if kind == PerturbationKind.RANDOM_DIRECTION:
        return RandomDirection(magnitude, rng)
    return ControlProduct(magnitude, rng, **options)
