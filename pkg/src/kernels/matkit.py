#!/usr/bin/env python3
"""
Dense linear-algebra kernels shared by every analysis module.

Thin, convention-enforcing wrappers over numpy / scipy.linalg: QR with a
strictly positive R diagonal (identical to classical Gram-Schmidt of the
columns), Pade scaling-and-squaring matrix exponential, Hessenberg + shifted
QR eigenvalues, SVD null spaces and a Hurwitz test with a Lyapunov-equation
certificate.
"""

import logging
import math
from typing import List, NamedTuple, Optional

import numpy as np
import scipy.linalg

from src.errors import NoConvergence, SingularInput

logger = logging.getLogger(__name__)

RANK_TOL = 1e-9
HURWITZ_MARGIN = 1e-9
MAX_DIM = 16
TAYLOR_DEGREE = 10
TAYLOR_RADIUS = 0.25


class QrPair(NamedTuple):
    """Q orthogonal/unitary, R upper-triangular with positive real diagonal"""
    q: np.ndarray
    r: np.ndarray


class LyapunovCertificate(NamedTuple):
    """Solution P of A^T P + P A = -I and whether it is positive definite"""
    p: np.ndarray
    positive_definite: bool
    min_eigenvalue: float


def as_matrix(data, dtype=None) -> np.ndarray:
    """Validate and convert input to a square, finite 2-D array"""
    m = np.array(data, dtype=dtype)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"Matrix must be square and non-empty, got shape {m.shape}")
    if not np.issubdtype(m.dtype, np.number):
        raise ValueError(f"Matrix entries must be numeric, got dtype {m.dtype}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix entries must be finite (no NaN/Inf)")
    if not np.iscomplexobj(m):
        m = m.astype(float)
    return m


def qr(m: np.ndarray, tol: float = RANK_TOL) -> QrPair:
    """
    QR factorization normalized so that diag(R) > 0.

    With this convention the factorization is unique and Q equals the
    Gram-Schmidt orthonormalization of the columns of m.
    """
    q, r = np.linalg.qr(m)
    d = np.diagonal(r)
    magnitudes = np.abs(d)
    scale = max(float(np.max(np.abs(r))), np.finfo(float).tiny)
    if np.min(magnitudes) <= tol * scale:
        raise SingularInput(
            f"R diagonal {np.min(magnitudes):.3e} below rank tolerance {tol * scale:.3e}"
        )
    phase = d / magnitudes
    q = q * phase[np.newaxis, :]
    r = np.conj(phase)[:, np.newaxis] * r
    if np.iscomplexobj(r):
        # diagonal is real positive after the phase fix; drop roundoff imaginary parts
        idx = np.diag_indices_from(r)
        r[idx] = r[idx].real
    return QrPair(q, np.triu(r))


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade); accepts stacked (..., n, n)"""
    return scipy.linalg.expm(m)


def expm_taylor(m: np.ndarray, degree: int = TAYLOR_DEGREE) -> np.ndarray:
    """
    Exponential of a stack (..., n, n) by truncated Taylor series with
    scaling and squaring, vectorized over the leading axes.

    Meant for many short frozen-coefficient steps; scaled 1-norms stay below
    TAYLOR_RADIUS so the truncation error is below double precision.
    """
    m = np.asarray(m)
    n = m.shape[-1]
    norm = float(np.max(np.sum(np.abs(m), axis=-2))) if m.size else 0.0
    squarings = max(0, math.ceil(math.log2(norm / TAYLOR_RADIUS))) if norm > 0 else 0
    scaled = m / 2.0 ** squarings
    eye = np.broadcast_to(np.eye(n), m.shape)
    # Horner form of sum_k X^k / k!
    result = eye + scaled / degree
    for k in range(degree - 1, 0, -1):
        result = eye + (scaled @ result) / k
    for _ in range(squarings):
        result = result @ result
    return result


def eigenvalues(m: np.ndarray) -> np.ndarray:
    """All n eigenvalues with multiplicity, as complex numbers"""
    if m.shape[0] > MAX_DIM:
        logger.warning(f"eigenvalues called on {m.shape[0]}x{m.shape[0]} matrix, above n={MAX_DIM}")
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"Eigenvalue iteration did not converge: {e}") from e
    return values.astype(complex)


def spectral_abscissa(m: np.ndarray) -> float:
    """Largest real part of the spectrum"""
    return float(np.max(eigenvalues(m).real))


def is_hurwitz(m: np.ndarray, margin: float = HURWITZ_MARGIN) -> bool:
    """True iff every eigenvalue has real part below -margin"""
    return spectral_abscissa(m) < -margin


def lyapunov_certificate(m: np.ndarray) -> LyapunovCertificate:
    """Solve A^T P + P A = -I; P positive definite iff A is Hurwitz"""
    a = np.asarray(m)
    n = a.shape[0]
    try:
        # scipy solves A X + X A^H = Q, so pass A^H to get A^H P + P A = -I
        p = scipy.linalg.solve_continuous_lyapunov(a.conj().T, -np.eye(n))
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.debug(f"Lyapunov equation has no unique solution: {e}")
        return LyapunovCertificate(np.full((n, n), np.nan), False, float("nan"))
    p = 0.5 * (p + p.conj().T)
    min_eig = float(np.min(np.linalg.eigvalsh(p)))
    return LyapunovCertificate(p, bool(min_eig > 0), min_eig)


def nullspace(m: np.ndarray, tol: float = RANK_TOL) -> List[np.ndarray]:
    """Orthonormal basis of directions with singular value <= tol * largest"""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    basis = scipy.linalg.null_space(np.atleast_2d(m), rcond=tol)
    return [basis[:, k] for k in range(basis.shape[1])]


def nullspace_matrix(m: np.ndarray, tol: float = RANK_TOL,
                     scale: Optional[float] = None) -> np.ndarray:
    """
    Same as nullspace, columns stacked into an (n, k) array.

    With ``scale`` the cutoff is tol * max(largest singular value, scale), so
    a matrix that is roundoff relative to a reference magnitude has a full
    kernel instead of being judged against its own noise.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    m = np.atleast_2d(m)
    if scale is None:
        return scipy.linalg.null_space(m, rcond=tol)
    _, s, vh = scipy.linalg.svd(m, full_matrices=True)
    largest = float(s[0]) if s.size else 0.0
    cutoff = tol * max(largest, float(scale))
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    """Numerical rank relative to the largest singular value"""
    s = np.linalg.svd(np.atleast_2d(m), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))
