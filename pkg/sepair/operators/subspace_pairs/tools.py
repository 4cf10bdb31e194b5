import numpy as np

from sepair.common.exceptions import (
    InternalInconsistencyError,
    NotAProjectionError,
    NotSeparatedError,
    PreconditionFailedError,
)
from sepair.operators.hilbert_core.models import DEFAULT_TOLERANCE, Subspace, Tolerance
from sepair.operators.hilbert_core.tools import (
    _check_same_ambient,
    as_matrix,
    complementary_projectors,
    intersect,
    is_projection,
    operator_norm,
    orth_complement,
    projection,
    range_space,
    singular_values,
    subspace_sum,
    subspaces_equal,
)
from sepair.operators.subspace_pairs.models import (
    CombinationCheck,
    PairReport,
    SampledRatios,
    SumEquivalenceReport,
)
from shared.logger_setup import get_logger
from shared.utils import pair_of

logger = get_logger(__name__)

# (lambda1, lambda2) samples, all with lambda1, lambda2 != 0 and lambda1 + lambda2 != 0
DEFAULT_COMBINATIONS: tuple[tuple[complex, complex], ...] = (
    (2, -1),
    (1, 1),
    (1j, 2),
    (-3, 0.5),
    (1 + 1j, 1 - 2j),
)


def principal_cosines(H: Subspace, K: Subspace) -> np.ndarray:
    """Cosines of all principal angles, in decreasing order."""
    _check_same_ambient(H, K)
    if H.dim == 0 or K.dim == 0:
        return np.zeros(0)
    return np.clip(singular_values(H.frame.conj().T @ K.frame), 0.0, 1.0)


def dixmier_cosine(H: Subspace, K: Subspace) -> float:
    cosines = principal_cosines(H, K)
    return float(cosines[0]) if cosines.size else 0.0


def friedrichs_cosine(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    _check_same_ambient(H, K)
    if H.dim == 0 or K.dim == 0:
        return 0.0
    meet = intersect(H, K, tol)
    value = operator_norm(projection(H) @ projection(K) - projection(meet))
    return float(np.clip(value, 0.0, 1.0))


def separation_constants(
    H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE
) -> tuple[float, float]:
    """alpha_i = 1/||Pi_i|| for the idempotents splitting H + K along (H+K)⊥."""
    _check_same_ambient(H, K)
    if H.dim == 0 or K.dim == 0:
        return 1.0, 1.0
    if dixmier_cosine(H, K) >= 1.0 - tol.rank_rel:
        raise NotSeparatedError("H ∩ K ≠ 0: no separation constants exist")
    rest = orth_complement(subspace_sum(H, K, tol))
    (pi1, pi2, _), _ = complementary_projectors([H, K, rest], tol)
    return 1.0 / operator_norm(pi1), 1.0 / operator_norm(pi2)


def stacked_intersection_dim(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    """
    dim(H ∩ K) = dim H + dim K - rank [frame_H frame_K].

    For orthonormal frames the squared singular values of the stacked matrix
    are 1 ± cos(theta_i), so sigma^2 <= rank_rel is the same cutoff as
    c0 >= 1 - rank_rel.
    """
    _check_same_ambient(H, K)
    if H.dim == 0 or K.dim == 0:
        return 0
    s = singular_values(np.hstack([H.frame, K.frame]))
    return H.dim + K.dim - int(np.count_nonzero(s**2 > tol.rank_rel))


def is_separated(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> PairReport:
    _check_same_ambient(H, K)
    if H.dim == 0 or K.dim == 0:
        return PairReport(c0=0.0, c=0.0, dim_intersection=0, separated=True, alpha1=1.0, alpha2=1.0)

    c0 = dixmier_cosine(H, K)
    c = min(friedrichs_cosine(H, K, tol), c0)
    meet = intersect(H, K, tol)
    separated = c0 < 1.0 - tol.rank_rel
    stacked_dim = stacked_intersection_dim(H, K, tol)
    if separated != (stacked_dim == 0):
        # Rounding can split the verdicts only next to the cutoff; there the cosine decides.
        if abs(c0 - (1.0 - tol.rank_rel)) > tol.rank_rel:
            logger.error(f"Separation criteria disagree: c0={c0!r}, rank deficiency of [H K] is {stacked_dim}")
            raise InternalInconsistencyError(
                f"c0 = {c0!r} but dim H + dim K - rank [H K] = {stacked_dim}"
            )
        logger.debug(f"c0 = {c0!r} sits on the cutoff; stacked rank gives dim {stacked_dim}")

    alpha1 = alpha2 = None
    if separated:
        alpha1, alpha2 = separation_constants(H, K, tol)
    return PairReport(
        c0=c0,
        c=c,
        dim_intersection=meet.dim,
        separated=separated,
        alpha1=alpha1,
        alpha2=alpha2,
    )


def check_sum_equivalences(
    P,
    Q,
    tol: Tolerance = DEFAULT_TOLERANCE,
    combinations: tuple[tuple[complex, complex], ...] = DEFAULT_COMBINATIONS,
) -> SumEquivalenceReport:
    P, Q = as_matrix(P), as_matrix(Q)
    for name, M in (("P", P), ("Q", Q)):
        if not is_projection(M, tol):
            raise NotAProjectionError(f"{name} is not a self-adjoint idempotent")
    if P.shape != Q.shape:
        raise NotAProjectionError(f"P and Q act on different spaces: {P.shape} vs {Q.shape}")

    identity = np.eye(P.shape[0])
    total = subspace_sum(range_space(P, tol), range_space(Q, tol), tol)
    complement_total = subspace_sum(range_space(identity - P, tol), range_space(identity - Q, tol), tol)

    checks = []
    for lambda1, lambda2 in combinations:
        if lambda1 == 0 or lambda2 == 0 or lambda1 + lambda2 == 0:
            raise PreconditionFailedError(
                f"Coefficients ({lambda1}, {lambda2}) must be nonzero with nonzero sum"
            )
        combined = range_space(lambda1 * P + lambda2 * Q, tol)
        checks.append(
            CombinationCheck(
                lambda1=pair_of(lambda1),
                lambda2=pair_of(lambda2),
                equal=subspaces_equal(total, combined, tol),
            )
        )

    report = SumEquivalenceReport(
        common_dim=total.dim,
        sum_range_equal=subspaces_equal(total, range_space(P + Q, tol), tol),
        complement_range_equal=subspaces_equal(
            complement_total, range_space(2 * identity - P - Q, tol), tol
        ),
        combinations=checks,
    )
    logger.debug(f"Sum equivalences: {report.model_dump()}")
    return report


def sampled_separation_ratio(
    H: Subspace, K: Subspace, samples: int, rng: np.random.Generator
) -> SampledRatios:
    """
    Sampled minima of ||x+y||/||x|| and ||x+y||/||y||.

    For a fixed unit x ∈ H the best y ∈ K is -P_K x, so each sample costs one
    projection; the minimum over samples approaches 1/||Pi_1|| from above.
    """
    _check_same_ambient(H, K)
    P_H, P_K = projection(H), projection(K)

    def _sample_min(S: Subspace, P_other: np.ndarray) -> float:
        if S.dim == 0:
            return 1.0
        coefficients = rng.standard_normal((S.dim, samples)) + 1j * rng.standard_normal((S.dim, samples))
        vectors = S.frame @ coefficients
        vectors /= np.linalg.norm(vectors, axis=0)
        return float(np.min(np.linalg.norm(vectors - P_other @ vectors, axis=0)))

    return SampledRatios(
        min_ratio_x=_sample_min(H, P_K),
        min_ratio_y=_sample_min(K, P_H),
        samples=samples,
    )
