import numpy as np
import scipy.linalg

from sepair.common.exceptions import NotSeparatedError, ShapeMismatchError
from sepair.operators.hilbert_core.models import DEFAULT_TOLERANCE, Subspace, Tolerance
from shared.logger_setup import get_logger

logger = get_logger(__name__)


def as_matrix(value) -> np.ndarray:
    matrix = np.asarray(value, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ShapeMismatchError(f"Expected a 2-D matrix, got shape {matrix.shape}")
    return matrix


def singular_values(T) -> np.ndarray:
    T = as_matrix(T)
    if T.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(T)


def _rank_from_singular_values(s: np.ndarray, tol: Tolerance) -> int:
    # A matrix within eq_abs of zero is zero; otherwise the cutoff is relative.
    if s.size == 0 or s[0] <= tol.eq_abs:
        return 0
    return int(np.count_nonzero(s > tol.rank_rel * s[0]))


def _canonical_phases(frame: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest entry (lowest index on ties) is real positive."""
    if frame.size == 0:
        return frame
    pivots = np.argmax(np.abs(frame), axis=0)
    phases = frame[pivots, np.arange(frame.shape[1])]
    return frame * (np.abs(phases) / phases).conj()


def _subspace(frame: np.ndarray, tol: Tolerance) -> Subspace:
    return Subspace.model_validate({"ambient_dim": frame.shape[0], "frame": frame}, context={"tol": tol})


def full_space(d: int) -> Subspace:
    return Subspace(ambient_dim=d, frame=np.eye(d, dtype=np.complex128))


def zero_space(d: int) -> Subspace:
    return Subspace(ambient_dim=d, frame=np.zeros((d, 0), dtype=np.complex128))


def orthonormalize(vectors, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    """Orthonormal frame for the column space of `vectors` (numerical rank by SVD)."""
    vectors = as_matrix(vectors)
    d = vectors.shape[0]
    if vectors.shape[1] == 0:
        return zero_space(d)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    rank = _rank_from_singular_values(s, tol)
    return _subspace(_canonical_phases(u[:, :rank]), tol)


def span(*vectors, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    return orthonormalize(np.column_stack([np.asarray(v, dtype=np.complex128) for v in vectors]), tol)


def projection(S: Subspace) -> np.ndarray:
    return S.frame @ S.frame.conj().T


def moore_penrose(T, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    T = as_matrix(T)
    if T.size == 0 or operator_norm(T) <= tol.eq_abs:
        return np.zeros((T.shape[1], T.shape[0]), dtype=np.complex128)
    return scipy.linalg.pinv(T, atol=0.0, rtol=tol.rank_rel)


def _check_same_ambient(H: Subspace, K: Subspace) -> None:
    if H.ambient_dim != K.ambient_dim:
        raise ShapeMismatchError(
            f"Subspaces live in different spaces: C^{H.ambient_dim} vs C^{K.ambient_dim}"
        )


def intersect(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    """H ∩ K from the singular vectors of frame_H* frame_K at singular value 1."""
    _check_same_ambient(H, K)
    if H.dim == 0 or K.dim == 0:
        return zero_space(H.ambient_dim)
    u, s, _ = np.linalg.svd(H.frame.conj().T @ K.frame)
    count = int(np.count_nonzero(s >= 1.0 - tol.rank_rel))
    return orthonormalize(H.frame @ u[:, :count], tol)


def subspace_sum(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    _check_same_ambient(H, K)
    return orthonormalize(np.hstack([H.frame, K.frame]), tol)


def orth_complement(H: Subspace) -> Subspace:
    if H.dim == 0:
        return full_space(H.ambient_dim)
    if H.dim == H.ambient_dim:
        return zero_space(H.ambient_dim)
    complement = scipy.linalg.null_space(H.frame.conj().T)
    return Subspace(ambient_dim=H.ambient_dim, frame=_canonical_phases(complement))


def operator_norm(T) -> float:
    s = singular_values(T)
    return float(s[0]) if s.size else 0.0


def numerical_rank(T, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    return _rank_from_singular_values(singular_values(T), tol)


def min_positive_singular(T, tol: Tolerance = DEFAULT_TOLERANCE) -> float | None:
    """Smallest singular value above the rank cutoff; None when T is numerically zero."""
    s = singular_values(T)
    rank = _rank_from_singular_values(s, tol)
    if rank == 0:
        return None
    return float(s[rank - 1])


def range_space(T, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    return orthonormalize(T, tol)


def kernel_space(T, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    T = as_matrix(T)
    n = T.shape[1]
    if T.shape[0] == 0:
        return full_space(n)
    _, s, vh = np.linalg.svd(T, full_matrices=True)
    rank = _rank_from_singular_values(s, tol)
    return _subspace(_canonical_phases(vh[rank:].conj().T), tol)


def projection_distance(H: Subspace, K: Subspace) -> float:
    _check_same_ambient(H, K)
    return operator_norm(projection(H) - projection(K))


def subspaces_equal(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    return H.dim == K.dim and projection_distance(H, K) <= tol.eq_abs


def contains(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """True when K ⊆ H."""
    _check_same_ambient(H, K)
    if K.dim == 0:
        return True
    residual = K.frame - projection(H) @ K.frame
    return operator_norm(residual) <= tol.eq_abs


def matrices_close(A, B, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """||A - B|| <= eq_abs, scaled up by the larger norm when that exceeds 1."""
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        return False
    scale = max(1.0, operator_norm(A), operator_norm(B))
    return operator_norm(A - B) <= tol.eq_abs * scale


def is_idempotent(M, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        return False
    return operator_norm(M @ M - M) <= tol.eq_abs


def is_projection(P, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    P = as_matrix(P)
    return is_idempotent(P, tol) and operator_norm(P - P.conj().T) <= tol.eq_abs


def complementary_projectors(
    parts: list[Subspace], tol: Tolerance = DEFAULT_TOLERANCE
) -> tuple[list[np.ndarray], float]:
    """
    Oblique projectors for a direct-sum decomposition C^d = S_1 ⊕ ... ⊕ S_r.

    With M = [frame_1 ... frame_r], the projector onto S_i along the other
    summands is frame_i times the matching row block of M^{-1}.

    Returns:
        The projectors in the order of `parts` and the condition number of M.
    """
    d = parts[0].ambient_dim
    for part in parts[1:]:
        _check_same_ambient(parts[0], part)
    basis = np.hstack([part.frame for part in parts])
    if basis.shape[1] != d:
        raise NotSeparatedError(
            f"Summands of total dimension {basis.shape[1]} do not decompose C^{d}"
        )
    if d == 0:
        return [np.zeros((0, 0), dtype=np.complex128) for _ in parts], 1.0
    s = singular_values(basis)
    if s[-1] <= tol.rank_rel * s[0]:
        raise NotSeparatedError("Summands are not linearly independent")
    condition = float(s[0] / s[-1])
    inverse = np.linalg.inv(basis)
    projectors, start = [], 0
    for part in parts:
        projectors.append(part.frame @ inverse[start : start + part.dim])
        start += part.dim
    logger.debug(f"Direct sum of {len(parts)} summands in C^{d}, basis condition {condition:.3e}")
    return projectors, condition
