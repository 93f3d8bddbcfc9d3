"""Dense complex linear algebra kernels used by the precoder builders.

Everything here operates on small matrices (a handful of users and
antennas), so clarity and reproducibility win over raw speed. All
routines are deterministic: same input bits, same output bits.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    RankDeficientError,
    ZeroMatrixError,
)

# Relative threshold on singular values below which a matrix is treated
# as row-rank deficient.
_RANK_RTOL = 1e-10

# Power iteration on the Gram matrix. Tolerance is on the iterate delta,
# not the eigenvalue, so the returned vector itself is stable.
_POWER_ITER_TOL = 1e-12
_POWER_ITER_MAX = 10000

# Components below this magnitude are skipped when picking the entry
# that anchors the phase convention.
_PHASE_ANCHOR_MIN = 1e-6


@dataclass(frozen=True)
class LqFactors:
    """Result of a row-wise triangular factorization A = L Q.

    Attributes:
        l_matrix: (K, K) lower triangular with real, strictly positive
            diagonal.
        q_matrix: (K, N) with orthonormal rows, Q Q^H = I.
    """

    l_matrix: np.ndarray
    q_matrix: np.ndarray

    @property
    def diagonal(self) -> np.ndarray:
        """Real positive diagonal of L as a 1-D array."""
        return np.real(np.diagonal(self.l_matrix))


def _as_complex_matrix(a, op_name: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatchError(
            f"{op_name} expects a 2-D array, got ndim={a.ndim}"
        )
    return a


def _check_full_row_rank(a: np.ndarray, op_name: str) -> None:
    if not np.any(a):
        raise ZeroMatrixError(f"{op_name}: matrix is identically zero")
    singular_values = np.linalg.svd(a, compute_uv=False)
    if singular_values[-1] <= _RANK_RTOL * singular_values[0]:
        raise RankDeficientError(
            f"{op_name}: matrix is row-rank deficient "
            f"(smallest/largest singular value = "
            f"{singular_values[-1] / singular_values[0]:.3e})"
        )


def lq_decompose(a) -> LqFactors:
    """Factor a wide full-row-rank matrix as A = L Q.

    Computed as the conjugate transpose of a reduced QR factorization of
    A^H. LAPACK does not fix the sign of the R diagonal, so a diagonal
    phase is moved between the factors to make diag(L) real positive,
    which makes the factorization unique and reproducible.

    Args:
        a: (K, N) complex array with K <= N and full row rank.

    Returns:
        LqFactors with the normalized factors.

    Raises:
        DimensionMismatchError: if a is not 2-D or K > N.
        ZeroMatrixError: if a is identically zero.
        RankDeficientError: if a does not have full row rank.
    """
    a = _as_complex_matrix(a, "lq_decompose")
    n_rows, n_cols = a.shape
    if n_rows > n_cols:
        raise DimensionMismatchError(
            f"lq_decompose expects K <= N, got shape {a.shape}"
        )
    _check_full_row_rank(a, "lq_decompose")

    q_tall, r = np.linalg.qr(a.conj().T)
    l_raw = r.conj().T
    q_rows = q_tall.conj().T

    d = np.diagonal(l_raw)
    phase = d / np.abs(d)
    # L <- L diag(phase)^{-1}, Q <- diag(phase) Q keeps the product A.
    l_matrix = l_raw * phase.conj()[np.newaxis, :]
    q_matrix = phase[:, np.newaxis] * q_rows
    return LqFactors(l_matrix=l_matrix, q_matrix=q_matrix)


def pseudo_inverse(a) -> np.ndarray:
    """Right pseudo-inverse A^H (A A^H)^{-1} of a wide full-row-rank matrix.

    Raises the same errors as lq_decompose for bad input.
    """
    a = _as_complex_matrix(a, "pseudo_inverse")
    n_rows, n_cols = a.shape
    if n_rows > n_cols:
        raise DimensionMismatchError(
            f"pseudo_inverse expects K <= N, got shape {a.shape}"
        )
    _check_full_row_rank(a, "pseudo_inverse")
    gram = a @ a.conj().T
    # X = A^H G^{-1}, solved as G X^H = A using that G is Hermitian.
    return np.linalg.solve(gram, a).conj().T


def dominant_right_singular_vector(a) -> np.ndarray:
    """Unit-norm right singular vector for the largest singular value.

    Power iteration on A^H A from a fixed all-ones start, run to a fixed
    tolerance, so the result is bit-reproducible. The phase is anchored
    by making the first component of non-negligible magnitude real
    positive.

    Args:
        a: (K, N) complex array, not identically zero.

    Returns:
        (N,) complex unit vector.

    Raises:
        DimensionMismatchError: if a is not 2-D.
        ZeroMatrixError: if a is identically zero.
    """
    a = _as_complex_matrix(a, "dominant_right_singular_vector")
    if not np.any(a):
        raise ZeroMatrixError(
            "dominant_right_singular_vector: matrix is identically zero"
        )
    n_cols = a.shape[1]
    gram = a.conj().T @ a
    v = np.ones(n_cols, dtype=complex) / np.sqrt(n_cols)
    for _ in range(_POWER_ITER_MAX):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # Start vector is orthogonal to the row space; perturb once.
            v = np.zeros(n_cols, dtype=complex)
            v[0] = 1.0
            continue
        w = w / norm
        # The iterate can flip sign each step when the start vector has a
        # negative overlap, so compare against both signs.
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < _POWER_ITER_TOL:
            v = w
            break
        v = w

    anchors = np.flatnonzero(np.abs(v) > _PHASE_ANCHOR_MIN)
    anchor = anchors[0] if anchors.size else int(np.argmax(np.abs(v)))
    v = v * (np.conj(v[anchor]) / np.abs(v[anchor]))
    return v
