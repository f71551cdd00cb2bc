"""
Numerical kernels: dense linear algebra and Lie-algebraic family analysis
"""

from .matkit import (
    as_matrix,
    qr,
    expm,
    eigenvalues,
    spectral_abscissa,
    is_hurwitz,
    lyapunov_certificate,
    nullspace,
    rank,
)
from .lie import (
    MatrixFamily,
    ProbabilityVector,
    LieBasis,
    Triangularization,
    bracket,
    generate_lie_algebra,
    derived_series,
    is_solvable,
    simultaneous_triangularize,
    closed_form_exponents,
    convex_mean_stable,
    stabilizing_alpha,
)

__all__ = [
    'as_matrix',
    'qr',
    'expm',
    'eigenvalues',
    'spectral_abscissa',
    'is_hurwitz',
    'lyapunov_certificate',
    'nullspace',
    'rank',
    'MatrixFamily',
    'ProbabilityVector',
    'LieBasis',
    'Triangularization',
    'bracket',
    'generate_lie_algebra',
    'derived_series',
    'is_solvable',
    'simultaneous_triangularize',
    'closed_form_exponents',
    'convex_mean_stable',
    'stabilizing_alpha',
]
