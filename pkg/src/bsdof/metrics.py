"""Effective degree-of-freedom metrics built on the singular spectrum.

The participation number of a matrix with singular values sigma_i,

    M = (sum sigma_i^2)^2 / sum sigma_i^4,

counts how many singular values carry comparable weight: it is 1 for a
rank-1 matrix and reaches the dimensional cap N~ = min(rows, cols) exactly
when all N~ singular values are equal and nonzero.  Applied to the
end-to-end channel it gives the conventional MIMO DOF count; applied to the
load-to-output Jacobian it gives the local DOF count of load modulation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .network import ScatteringBlocks, closed_form_jacobian

# Spectra whose largest singular value is at or below this are treated as zero.
ZERO_SPECTRUM_FLOOR = 1e-300


@dataclass
class ParticipationResult:
    """Participation number plus the spectrum it came from."""

    m: float
    singular_values: np.ndarray
    n_tilde: int


def participation_from_singular_values(sigma, n_tilde: int | None = None) -> ParticipationResult:
    """Participation number of an explicit singular spectrum.

    Tiny singular values are kept: they contribute negligibly to both sums
    and truncating them would bias M.  The spectrum is normalized by its
    largest value first, which makes the ratio scale-invariant and immune to
    overflow.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if np.any(sigma < 0):
        raise ValueError("singular values must be nonnegative")
    top = float(sigma.max(initial=0.0))
    if top <= ZERO_SPECTRUM_FLOOR:
        raise DegenerateInputError("all singular values are zero; participation undefined")
    s2 = (sigma / top) ** 2
    m = float(s2.sum() ** 2 / (s2 @ s2))
    if n_tilde is None:
        n_tilde = sigma.size
    return ParticipationResult(m=m, singular_values=sigma, n_tilde=int(n_tilde))


def participation_number(matrix: np.ndarray) -> ParticipationResult:
    """Participation number of a matrix via its full SVD."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    sigma = np.linalg.svd(matrix, compute_uv=False)
    return participation_from_singular_values(sigma, n_tilde=min(matrix.shape))


def conventional_eemdof(h: np.ndarray) -> ParticipationResult:
    """DOF count of a fixed MIMO channel matrix."""
    return participation_number(h)


def benchmark_eemdof(blocks: ScatteringBlocks) -> ParticipationResult:
    """Upper-bound DOF benchmark: participation of the rx-by-bs coupling block.

    Every load-modulation Jacobian lives in the column space of s_rs, so its
    participation number is the natural ceiling for the point metric.
    """
    return participation_number(blocks.s_rs)


def bs_eemdof_point(blocks: ScatteringBlocks, r0: np.ndarray, x: np.ndarray) -> ParticipationResult:
    """Backscatter DOF count at one operating point (r0, x)."""
    jac = closed_form_jacobian(blocks, r0, x)
    return participation_from_singular_values(
        jac.singular_values, n_tilde=min(jac.matrix.shape)
    )


def column_space_residual(jac, s_rs: np.ndarray) -> float:
    """Relative Frobenius mass of a Jacobian outside the column space of s_rs.

    The projector is built from the left singular vectors of s_rs whose
    singular values exceed 1e-12 of the largest.  Always in [0, 1]; zero (to
    rounding) whenever the containment J = S_RS B holds.
    """
    matrix = np.asarray(getattr(jac, "matrix", jac), dtype=complex)
    norm = np.linalg.norm(matrix)
    if norm == 0.0:
        raise DegenerateInputError("zero Jacobian has no defined residual")
    u, sigma, _ = np.linalg.svd(np.asarray(s_rs, dtype=complex))
    rank = int(np.count_nonzero(sigma > 1e-12 * sigma.max(initial=0.0)))
    basis = u[:, :rank]
    residual = matrix - basis @ (basis.conj().T @ matrix)
    return float(np.linalg.norm(residual) / norm)
