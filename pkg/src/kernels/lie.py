#!/usr/bin/env python3
"""
Lie-algebraic analysis of a finite matrix family.

Bracket closure, derived series, solvability verdict, constructive
simultaneous triangularization of solvable families, the closed-form
almost-sure exponents of the triangular diagonals, the mean-system Hurwitz
test and a linear-programming search for a stabilizing probability vector.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from src.errors import NotSolvable, NumericalBreakdown
from src.kernels import matkit

logger = logging.getLogger(__name__)

INDEPENDENCE_TOL = 1e-9
EIGENSPACE_TOL = 1e-7
WEIGHT_CLUSTER_TOL = 1e-6
DEFECTIVE_CLUSTER_FACTOR = 100.0
TRIANGULAR_TOL = 1e-8
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class MatrixFamily:
    """The finite set A_1..A_N of real n x n matrices"""
    mats: Tuple[np.ndarray, ...]
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if len(self.mats) < 1:
            raise ValueError("MatrixFamily needs at least one matrix")
        mats = tuple(matkit.as_matrix(m) for m in self.mats)
        n = mats[0].shape[0]
        for i, m in enumerate(mats):
            if m.shape != (n, n):
                raise ValueError(f"Matrix {i + 1} has shape {m.shape}, expected ({n}, {n})")
            m.setflags(write=False)
        if self.labels is not None and len(self.labels) != len(mats):
            raise ValueError(f"Got {len(self.labels)} labels for {len(mats)} matrices")
        object.__setattr__(self, "mats", mats)

    @classmethod
    def from_lists(cls, mats: Sequence, labels: Optional[Sequence[str]] = None) -> "MatrixFamily":
        return cls(tuple(np.array(m, dtype=float) for m in mats),
                   tuple(labels) if labels is not None else None)

    @property
    def n(self) -> int:
        return self.mats[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.mats)

    def stacked(self) -> np.ndarray:
        """(N, n, n) array of the family"""
        return np.stack(self.mats)

    def mean(self, alpha: "ProbabilityVector") -> np.ndarray:
        """Convex combination sum_k alpha_k A_k"""
        return np.tensordot(alpha.values, self.stacked(), axes=1)

    def max_norm(self) -> float:
        return max(float(np.linalg.norm(m, 2)) for m in self.mats)


@dataclass(frozen=True)
class ProbabilityVector:
    """Positive probability vector alpha on {1..N}"""
    alpha: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(a) for a in self.alpha)
        if len(values) < 1:
            raise ValueError("alpha must have at least one entry")
        if any(not np.isfinite(a) or a <= 0 for a in values):
            raise ValueError(f"alpha entries must be positive, got {values}")
        total = sum(values)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"alpha must sum to 1 (tolerance {SIMPLEX_TOL}), got {total!r}")
        object.__setattr__(self, "alpha", values)

    @classmethod
    def uniform(cls, size: int) -> "ProbabilityVector":
        return cls(tuple([1.0 / size] * size))

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.alpha)

    def __len__(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class LieBasis:
    """Frobenius-orthonormal complex basis of the generated Lie algebra"""
    basis: Tuple[np.ndarray, ...]
    depth: int
    n: int

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class Triangularization:
    """T with T A_i T^-1 upper-triangular for every family member"""
    t: np.ndarray
    t_inv: np.ndarray
    triangulars: Tuple[np.ndarray, ...]
    diag: Tuple[np.ndarray, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "diag", tuple(np.diagonal(a).copy() for a in self.triangulars))

    @classmethod
    def from_transform(cls, fam: MatrixFamily, t: np.ndarray,
                       tol: float = TRIANGULAR_TOL) -> "Triangularization":
        """Accept a caller-supplied T, checking that it triangularizes the family"""
        t = matkit.as_matrix(t, dtype=complex)
        if matkit.rank(t) < fam.n:
            raise ValueError("Supplied transform is singular")
        t_inv = np.linalg.inv(t)
        triangulars = tuple(t @ a @ t_inv for a in fam.mats)
        _check_triangular(triangulars, tol)
        return cls(t, t_inv, triangulars)

    def lower_defect(self) -> float:
        """Largest strict-lower entry relative to the matrix norm"""
        return max(_relative_lower(a) for a in self.triangulars)


# ------------------------------------------------------------------ algebra

def bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Lie bracket [A, B] = AB - BA"""
    if a.shape != b.shape:
        raise ValueError(f"Bracket of mismatched shapes {a.shape} and {b.shape}")
    return a @ b - b @ a


class _SpanBuilder:
    """Incremental orthonormal basis of a subspace of C^{n x n}"""

    def __init__(self, n: int, scale: float, tol: float = INDEPENDENCE_TOL):
        self.n = n
        self.tol = tol
        self.scale = scale
        self.vectors: List[np.ndarray] = []

    def add(self, m: np.ndarray) -> bool:
        """Adjoin the component of m independent of the span; True if added"""
        v = np.asarray(m, dtype=complex).reshape(-1)
        for _ in range(2):  # re-orthogonalize once
            for w in self.vectors:
                v = v - np.vdot(w, v) * w
        norm = np.linalg.norm(v)
        if norm <= self.tol * self.scale:
            return False
        self.vectors.append(v / norm)
        return True

    def matrices(self) -> List[np.ndarray]:
        return [v.reshape(self.n, self.n) for v in self.vectors]


def _span(mats: Sequence[np.ndarray], n: int, tol: float = INDEPENDENCE_TOL) -> List[np.ndarray]:
    scale = max([float(np.linalg.norm(m)) for m in mats] + [0.0])
    if scale == 0.0:
        return []
    builder = _SpanBuilder(n, scale, tol)
    for m in mats:
        builder.add(m)
    return builder.matrices()


def generate_lie_algebra(fam: MatrixFamily, tol: float = INDEPENDENCE_TOL) -> LieBasis:
    """Close the family under brackets; the dimension never exceeds n^2"""
    n = fam.n
    scale = max(float(np.linalg.norm(m)) for m in fam.mats)
    if scale == 0.0:
        return LieBasis((), 0, n)
    builder = _SpanBuilder(n, 1.0, tol)
    for m in fam.mats:
        builder.add(m / scale)

    depth = 0
    frontier = list(range(len(builder.vectors)))
    while frontier and len(builder.vectors) < n * n:
        depth += 1
        current = builder.matrices()
        start = len(current)
        for i in frontier:
            for j in range(len(current)):
                if j in frontier and j <= i:
                    continue
                builder.add(bracket(current[i], current[j]))
                if len(builder.vectors) >= n * n:
                    break
        frontier = list(range(start, len(builder.vectors)))
        logger.debug(f"Bracket closure depth {depth}: dimension {len(builder.vectors)}")
    return LieBasis(tuple(builder.matrices()), depth, n)


def _derived(mats: Sequence[np.ndarray], n: int) -> List[np.ndarray]:
    brackets = [bracket(mats[i], mats[j]) for i in range(len(mats)) for j in range(i + 1, len(mats))]
    if not brackets:
        return []
    # brackets of an orthonormal basis are O(1); absolute floor keeps roundoff out
    scale = max(max(float(np.linalg.norm(b)) for b in brackets), 1.0)
    builder = _SpanBuilder(n, scale)
    for b in brackets:
        builder.add(b)
    return builder.matrices()


def derived_series_bases(basis: LieBasis) -> List[List[np.ndarray]]:
    """Bases of L, [L, L], ... until zero or stabilization"""
    series = [list(basis.basis)]
    while series[-1]:
        nxt = _derived(series[-1], basis.n)
        if len(nxt) == len(series[-1]):
            series.append(nxt)
            break
        series.append(nxt)
    return series


def derived_series(basis: LieBasis) -> List[int]:
    """Dimensions of the derived series until it reaches zero or stabilizes"""
    return [len(level) for level in derived_series_bases(basis)]


def is_solvable(fam: MatrixFamily) -> Tuple[bool, Optional[int]]:
    """(True, first ell with a zero derived algebra) or (False, None)"""
    dims = derived_series(generate_lie_algebra(fam))
    if dims[-1] == 0:
        return True, len(dims) - 1
    return False, None


# ------------------------------------------------------- triangularization

def _relative_lower(a: np.ndarray) -> float:
    norm = float(np.linalg.norm(a))
    lower = float(np.max(np.abs(np.tril(a, -1)))) if a.shape[0] > 1 else 0.0
    return lower / norm if norm > 0 else lower


def _check_triangular(triangulars: Sequence[np.ndarray], tol: float) -> None:
    for i, a in enumerate(triangulars):
        defect = _relative_lower(a)
        if defect > tol:
            raise NumericalBreakdown(
                f"Matrix {i + 1} keeps relative sub-diagonal mass {defect:.2e} > {tol:.0e}"
            )


def _cluster_eigenvalue(values: np.ndarray, tol: float) -> complex:
    """Pick one weight deterministically and average its cluster"""
    order = sorted(values, key=lambda z: (-round(z.real, 6), -round(z.imag, 6)))
    pick = order[0]
    scale = max(1.0, float(np.max(np.abs(values))))
    cluster = values[np.abs(values - pick) <= tol * scale]
    return complex(np.mean(cluster))


def _split_radius(dim: int) -> float:
    """Spread of a defective eigenvalue of multiplicity dim under roundoff"""
    return max(WEIGHT_CLUSTER_TOL, DEFECTIVE_CLUSTER_FACTOR * np.finfo(float).eps ** (1.0 / dim))


def _weight_nullspace(restricted: np.ndarray, tol: float, scale: float) -> Tuple[complex, np.ndarray]:
    """
    Eigenspace of one weight of ``restricted``.

    The mean over the roundoff split of a defective eigenvalue is accurate to
    working precision, a single split root is not; try the wide cluster first
    and fall back to the tight one when distinct weights were merged.
    """
    values = matkit.eigenvalues(restricted)
    dim = restricted.shape[0]
    mu = 0j
    null = np.zeros((dim, 0), dtype=complex)
    for cluster_tol in (_split_radius(dim), WEIGHT_CLUSTER_TOL):
        mu = _cluster_eigenvalue(values, cluster_tol)
        null = matkit.nullspace_matrix(restricted - mu * np.eye(dim), tol, scale=scale)
        if null.shape[1] > 0:
            break
    return mu, null


def _common_eigenvector(algebra: Sequence[np.ndarray], derived: Sequence[np.ndarray],
                        dim: int, tol: float, algebra_scale: float,
                        derived_scale: float) -> np.ndarray:
    """
    Common eigenvector of a solvable algebra acting on C^dim.

    The derived algebra acts nilpotently, so its joint kernel K is a nonzero
    invariant weight space of the ideal [L, L]. On K all members of L commute,
    and successive eigenspace refinement over the spanning set reaches a
    joint eigenspace.

    Rank decisions are made against the scales of the undeflated algebra:
    after deflation the compressed elements may be pure roundoff.
    """
    if derived:
        k = matkit.nullspace_matrix(np.vstack(derived), tol, scale=derived_scale)
    else:
        k = np.eye(dim, dtype=complex)
    if k.shape[1] == 0:
        raise NumericalBreakdown("Derived algebra has no common kernel at tolerance")

    e = k.astype(complex)
    for x in algebra:
        if e.shape[1] == 1:
            break
        restricted = e.conj().T @ x @ e
        if float(np.linalg.norm(restricted, 2)) <= tol * algebra_scale:
            continue
        mu, null = _weight_nullspace(restricted, tol, algebra_scale)
        if null.shape[1] == 0:
            raise NumericalBreakdown(f"Eigenspace for weight {mu:.6g} vanished at tolerance {tol}")
        e = e @ null
        e, _ = np.linalg.qr(e)
    return e[:, 0] / np.linalg.norm(e[:, 0])


def simultaneous_triangularize(fam: MatrixFamily, tol: float = EIGENSPACE_TOL) -> Triangularization:
    """
    Unitary T making every T A_i T^-1 upper-triangular (solvable families).

    Repeatedly finds a common eigenvector, makes it the next basis vector and
    deflates to the quotient action on its orthogonal complement. The columns
    of T^-1 are the constructed basis.
    """
    basis = generate_lie_algebra(fam)
    series = derived_series_bases(basis)
    if series[-1]:
        raise NotSolvable(f"Derived series stabilizes at dimension {len(series[-1])}")

    n = fam.n
    algebra = [np.asarray(m, dtype=complex) for m in basis.basis]
    derived = [np.asarray(m, dtype=complex) for m in series[1]] if len(series) > 1 else []
    columns = []
    complement = np.eye(n, dtype=complex)
    algebra_scale = max([float(np.linalg.norm(x, 2)) for x in algebra] + [0.0])
    derived_scale = float(np.linalg.norm(np.vstack(derived), 2)) if derived else 0.0

    for step in range(n):
        dim = n - step
        if dim == 1:
            columns.append(complement[:, 0])
            break
        v = _common_eigenvector(algebra, derived, dim, tol, algebra_scale, derived_scale)
        # unitary completion [v, W] of the current coordinates
        householder, _ = np.linalg.qr(np.column_stack([v, np.eye(dim, dtype=complex)]))
        householder = householder * (np.vdot(householder[:, 0], v) / abs(np.vdot(householder[:, 0], v)))
        w = householder[:, 1:]
        columns.append(complement @ v)
        algebra = [w.conj().T @ x @ w for x in algebra]
        derived = [w.conj().T @ x @ w for x in derived]
        complement = complement @ w
        logger.debug(f"Triangularization step {step + 1}/{n} done")

    t_inv = np.column_stack(columns)
    t = t_inv.conj().T
    triangulars = tuple(t @ a @ t_inv for a in fam.mats)
    _check_triangular(triangulars, TRIANGULAR_TOL)
    return Triangularization(t, t_inv, triangulars)


# ------------------------------------------------------------ exponents

def closed_form_exponents(tri: Triangularization,
                          alpha: ProbabilityVector) -> Tuple[np.ndarray, float]:
    """theta_i = sum_j alpha_j Re(diag_j[i]); chi = max_i theta_i"""
    if len(alpha) != len(tri.diag):
        raise ValueError(f"alpha has {len(alpha)} entries for {len(tri.diag)} matrices")
    diag = np.real(np.stack(tri.diag))  # (N, n)
    theta = alpha.values @ diag
    return theta, float(np.max(theta))


def convex_mean_stable(fam: MatrixFamily, alpha: ProbabilityVector) -> bool:
    """Whether sum_k alpha_k A_k is Hurwitz"""
    if len(alpha) != fam.size:
        raise ValueError(f"alpha has {len(alpha)} entries for {fam.size} matrices")
    return matkit.is_hurwitz(fam.mean(alpha))


def stabilizing_alpha(tri: Triangularization,
                      floor: float = 1e-3) -> Tuple[Optional[ProbabilityVector], float]:
    """
    Positive alpha minimizing max_i theta_i(alpha) by linear programming.

    Returns (alpha, margin) where margin is max_i theta_i at the optimum;
    alpha is None when the optimum is not negative.
    """
    diag = np.real(np.stack(tri.diag))  # (N, n)
    size, n = diag.shape
    if floor * size >= 1.0:
        raise ValueError(f"floor {floor} too large for {size} symbols")
    # variables (alpha_1..alpha_N, s); minimize s
    c = np.zeros(size + 1)
    c[-1] = 1.0
    a_ub = np.hstack([diag.T, -np.ones((n, 1))])
    b_ub = np.zeros(n)
    a_eq = np.hstack([np.ones((1, size)), np.zeros((1, 1))])
    bounds = [(floor, 1.0)] * size + [(None, None)]
    result = scipy.optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                                    bounds=bounds, method="highs")
    if not result.success:
        logger.warning(f"Stabilizing alpha search failed: {result.message}")
        return None, float("nan")
    weights = np.clip(result.x[:size], floor, None)
    weights = weights / weights.sum()
    margin = float(np.max(weights @ diag))
    if margin >= 0:
        return None, margin
    # renormalize to an exact simplex point within SIMPLEX_TOL
    weights[-1] = 1.0 - float(np.sum(weights[:-1]))
    return ProbabilityVector(tuple(weights)), margin
