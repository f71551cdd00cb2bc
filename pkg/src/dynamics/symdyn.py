#!/usr/bin/env python3
"""
Symbolic driving system: i.i.d. symbol sequences, the shift, unit-dwell
switching signals and points of the suspension semiflow.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.errors import PrefixExhausted, SymbolOutOfRange
from src.kernels.lie import ProbabilityVector

logger = logging.getLogger(__name__)


def trial_rng(master_seed: int, trial_index: int = 0, *streams: int) -> np.random.Generator:
    """Counter-based stream depending only on (master_seed, trial_index, *streams)"""
    key = [master_seed, trial_index, *streams]
    if any(k < 0 for k in key):
        raise ValueError(f"Seeds must be non-negative, got {tuple(key)}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def derived_seed(master_seed: int, *indices: int) -> int:
    """Deterministic 32-bit child seed"""
    return int(np.random.SeedSequence([master_seed, *indices]).generate_state(1)[0])


@dataclass(frozen=True)
class SymbolSeq:
    """Finite prefix of a one-sided sequence over {1..N} (1-based symbols)"""
    symbols: Tuple[int, ...]
    n_symbols: int
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n_symbols < 1:
            raise ValueError(f"Alphabet size must be >= 1, got {self.n_symbols}")
        symbols = tuple(int(s) for s in self.symbols)
        bad = [s for s in symbols if s < 1 or s > self.n_symbols]
        if bad:
            raise SymbolOutOfRange(f"Symbols {bad[:5]} outside 1..{self.n_symbols}")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, k: int) -> int:
        return self.symbols[k]

    def require(self, length: int) -> None:
        if length > len(self.symbols):
            raise PrefixExhausted(f"Need {length} symbols, prefix has {len(self.symbols)}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=np.int64)


@dataclass(frozen=True)
class SwitchPoint:
    """Point [seq, tau] of the suspension space, 0 <= tau < 1"""
    seq: SymbolSeq
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")

    def horizon(self) -> float:
        """Largest t for which the prefix defines the signal on (0, t]"""
        return len(self.seq) - self.tau


def sample_sequence(alpha: ProbabilityVector, length: int, seed: int = 0,
                    rng: Optional[np.random.Generator] = None) -> SymbolSeq:
    """i.i.d. symbols with P(symbol k) = alpha_k; deterministic given seed"""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if rng is None:
        rng = trial_rng(seed)
    draws = rng.choice(len(alpha), size=length, p=alpha.values) + 1
    return SymbolSeq(tuple(int(s) for s in draws), len(alpha), seed)


def periodic_sequence(pattern: Sequence[int], n_symbols: int, length: int) -> SymbolSeq:
    """Repeat a word until the prefix has the requested length"""
    if not pattern:
        raise ValueError("pattern must be non-empty")
    reps = -(-length // len(pattern))
    return SymbolSeq(tuple(list(pattern) * reps)[:length], n_symbols)


def cylinder_probability(alpha: ProbabilityVector, word: Sequence[int]) -> float:
    """P_alpha of the cylinder [i_1..i_k]: product of alpha over the word"""
    n = len(alpha)
    bad = [s for s in word if s < 1 or s > n]
    if bad:
        raise SymbolOutOfRange(f"Symbols {bad} outside 1..{n}")
    if len(word) == 0:
        return 1.0
    return float(np.prod(alpha.values[np.asarray(word, dtype=int) - 1]))


def shift(seq: SymbolSeq, k: int) -> SymbolSeq:
    """Drop the first k symbols"""
    if k < 0:
        raise ValueError(f"Shift count must be >= 0, got {k}")
    seq.require(k)
    return SymbolSeq(seq.symbols[k:], seq.n_symbols, seq.seed)


def signal_at(seq: SymbolSeq, t: float) -> int:
    """sigma(t) = iota_k for k-1 < t <= k (left-continuous, t > 0)"""
    if t <= 0:
        raise ValueError(f"The switching signal is defined for t > 0, got {t}")
    k = math.ceil(t)
    seq.require(k)
    return seq[k - 1]


def suspension_advance(p: SwitchPoint, t: float) -> SwitchPoint:
    """[seq, tau] -> [seq, tau + t] in normal form"""
    if t < 0:
        raise ValueError(f"Semiflow time must be >= 0, got {t}")
    s = p.tau + t
    k = math.floor(s)
    frac = s - k
    if frac >= 1.0:  # roundoff at the boundary
        k, frac = k + 1, 0.0
    return SwitchPoint(shift(p.seq, k), frac)


def sample_switch_point(alpha: ProbabilityVector, horizon: float, seed: int = 0,
                        rng: Optional[np.random.Generator] = None) -> SwitchPoint:
    """Draw from P_alpha x Leb: prefix of ceil(horizon)+1 symbols, uniform tau"""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if rng is None:
        rng = trial_rng(seed)
    seq = sample_sequence(alpha, math.ceil(horizon) + 1, seed, rng=rng)
    tau = float(rng.random())
    return SwitchPoint(seq, tau)
