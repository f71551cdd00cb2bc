#!/usr/bin/env python3
"""
Built-in time-varying linear systems x' = A(t) x.

Coefficients are evaluated vectorized over a time grid so that
frozen-coefficient propagation can build whole intervals at once.
"""

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np


@dataclass(frozen=True)
class TimeVaryingSystem:
    """Named coefficient map t -> A(t), vectorized: (K,) -> (K, n, n)"""
    name: str
    n: int
    coefficients: Callable[[np.ndarray], np.ndarray]
    upper_triangular: bool = False

    def at(self, t: float) -> np.ndarray:
        return self.coefficients(np.array([t], dtype=float))[0]


def marcus_yamabe(a: float = 1.5, omega: float = 2.0) -> TimeVaryingSystem:
    """
    Periodic system whose frozen coefficients are Hurwitz for every t while
    x(t) = e^{omega (a-1) t} (-cos omega t, sin omega t) is a solution.

    Frozen eigenvalues are omega * ((a - 2) +- sqrt((a - 2)^2 - 4 (2 - a))) / 2,
    stable for 0 < a < 2. The defaults give growth rate 1.
    """
    def coefficients(t: np.ndarray) -> np.ndarray:
        c = np.cos(omega * t)
        s = np.sin(omega * t)
        out = np.empty(t.shape + (2, 2))
        out[..., 0, 0] = -1.0 + a * c * c
        out[..., 0, 1] = 1.0 - a * s * c
        out[..., 1, 0] = -1.0 - a * s * c
        out[..., 1, 1] = -1.0 + a * s * s
        return omega * out

    return TimeVaryingSystem("marcus-yamabe", 2, coefficients)


def triangular_decay(coupling: float = 1.0) -> TimeVaryingSystem:
    """Upper-triangular A(t) with diagonal -1/(1+t): frozen-stable, exponent 0"""
    def coefficients(t: np.ndarray) -> np.ndarray:
        out = np.zeros(t.shape + (2, 2))
        d = -1.0 / (1.0 + t)
        out[..., 0, 0] = d
        out[..., 1, 1] = d
        out[..., 0, 1] = coupling
        return out

    return TimeVaryingSystem("triangular-decay", 2, coefficients, upper_triangular=True)


SYSTEMS: Dict[str, Callable[..., TimeVaryingSystem]] = {
    "marcus-yamabe": marcus_yamabe,
    "triangular-decay": triangular_decay,
}


def get_system(name: str, **params: float) -> TimeVaryingSystem:
    if name not in SYSTEMS:
        raise ValueError(f"Unknown system '{name}', expected one of {sorted(SYSTEMS)}")
    return SYSTEMS[name](**params)
