import numpy as np

from sepair.common.exceptions import (
    InternalInconsistencyError,
    LambdaZeroError,
    NormNotLessThanOneError,
    NotAProjectionError,
    NotAnnihilatingError,
    NotIdempotentError,
    NotSeparatedError,
    ShapeMismatchError,
)
from sepair.config.configs import DEFAULT_LAMBDAS
from sepair.operators.hilbert_core.models import DEFAULT_TOLERANCE, Subspace, Tolerance
from sepair.operators.hilbert_core.tools import (
    as_matrix,
    complementary_projectors,
    contains,
    intersect,
    is_projection,
    kernel_space,
    matrices_close,
    min_positive_singular,
    moore_penrose,
    numerical_rank,
    operator_norm,
    orth_complement,
    projection,
    range_space,
    subspace_sum,
    subspaces_equal,
)
from sepair.operators.idempotents.models import (
    AdjointDecompositionReport,
    CanonicalPair,
    Idempotent,
    KolihaReport,
    LambdaRecord,
    MPFormulaReport,
    RangeSweepReport,
    SumProjectionDiagnosis,
)
from sepair.operators.subspace_pairs.tools import dixmier_cosine
from shared.logger_setup import get_logger
from shared.utils import pair_of

logger = get_logger(__name__)


def as_idempotent(matrix, tol: Tolerance = DEFAULT_TOLERANCE) -> Idempotent:
    """Validate `matrix` and attach its range and nullspace."""
    M = as_matrix(matrix)
    if M.shape[0] != M.shape[1]:
        raise ShapeMismatchError(f"Idempotent must be square, got {M.shape[0]}x{M.shape[1]}")
    residual = operator_norm(M @ M - M)
    if residual > tol.eq_abs * max(1.0, operator_norm(M) ** 2):
        raise NotIdempotentError(f"||M^2 - M|| = {residual:.3e}")
    return Idempotent.model_validate(
        {"matrix": M, "range": range_space(M, tol), "nullspace": kernel_space(M, tol)}, context={"tol": tol}
    )


def _check_projections(P: np.ndarray, Q: np.ndarray, tol: Tolerance) -> None:
    for name, M in (("P", P), ("Q", Q)):
        if not is_projection(M, tol):
            raise NotAProjectionError(f"{name} is not a self-adjoint idempotent")
    if P.shape != Q.shape:
        raise ShapeMismatchError(f"P and Q act on different spaces: {P.shape} vs {Q.shape}")


def _check_separated(H: Subspace, K: Subspace, tol: Tolerance) -> None:
    if H.dim and K.dim and dixmier_cosine(H, K) >= 1.0 - tol.rank_rel:
        raise NotSeparatedError(f"Ranges meet: dim(H∩K) = {intersect(H, K, tol).dim}")


def _check_annihilating(pi1: Idempotent, pi2: Idempotent, tol: Tolerance) -> None:
    if pi1.ambient_dim != pi2.ambient_dim:
        raise ShapeMismatchError("Idempotents act on different spaces")
    scale = max(1.0, operator_norm(pi1.matrix) * operator_norm(pi2.matrix))
    for product in (pi1.matrix @ pi2.matrix, pi2.matrix @ pi1.matrix):
        if operator_norm(product) > tol.eq_abs * scale:
            raise NotAnnihilatingError("Pi_1 Pi_2 and Pi_2 Pi_1 must both vanish")


def canonical_pair(H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE) -> CanonicalPair:
    """
    Idempotents Pi_1, Pi_2 with Pi_1(x+y+z) = x and Pi_2(x+y+z) = y
    for x in H, y in K, z in (H+K)⊥.

    The basis M = [frame_H frame_K frame_W] is inverted directly; its
    condition number is reported alongside.
    """
    _check_separated(H, K, tol)
    total = subspace_sum(H, K, tol)
    rest = orth_complement(total)
    (pi1, pi2, _), condition = complementary_projectors([H, K, rest], tol)
    logger.info(f"Canonical pair for dim H={H.dim}, dim K={K.dim}: basis condition {condition:.3e}")
    return CanonicalPair.model_validate(
        {
            "pi1": as_idempotent(pi1, tol),
            "pi2": as_idempotent(pi2, tol),
            "p_tilde": projection(total),
            "condition": condition,
        },
        context={"tol": tol},
    )


def _koliha_matrix(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    shifted = np.eye(P.shape[0]) - P @ Q
    return np.linalg.solve(shifted, P @ shifted)


def koliha_idempotent(P, Q, tol: Tolerance = DEFAULT_TOLERANCE) -> Idempotent:
    """Pi_{P,Q} = (I-PQ)^-1 P (I-PQ), the idempotent onto R(P) along R(Q) + (N(P) ∩ N(Q))."""
    P, Q = as_matrix(P), as_matrix(Q)
    _check_projections(P, Q, tol)
    norm = operator_norm(P @ Q)
    if norm >= 1.0 - tol.rank_rel:
        raise NormNotLessThanOneError(f"||PQ|| = {norm!r} is not below 1")

    result = as_idempotent(_koliha_matrix(P, Q), tol)
    expected_null = subspace_sum(
        range_space(Q, tol), intersect(kernel_space(P, tol), kernel_space(Q, tol), tol), tol
    )
    if not subspaces_equal(result.range, range_space(P, tol), tol):
        logger.error("Koliha idempotent range differs from R(P)")
        raise InternalInconsistencyError("R(Pi_{P,Q}) != R(P)")
    if not subspaces_equal(result.nullspace, expected_null, tol):
        logger.error("Koliha idempotent nullspace differs from R(Q) + (N(P) ∩ N(Q))")
        raise InternalInconsistencyError("N(Pi_{P,Q}) != R(Q) + (N(P) ∩ N(Q))")
    if not matrices_close(result.matrix @ P, P, tol):
        raise InternalInconsistencyError("Pi_{P,Q} P != P")
    return result


def koliha_identities(P, Q, tol: Tolerance = DEFAULT_TOLERANCE) -> KolihaReport:
    P, Q = as_matrix(P), as_matrix(Q)
    _check_projections(P, Q, tol)
    if operator_norm(P @ Q) >= 1.0 - tol.rank_rel:
        raise NormNotLessThanOneError(f"||PQ|| = {operator_norm(P @ Q)!r} is not below 1")

    identity = np.eye(P.shape[0])
    Pi = _koliha_matrix(P, Q)
    swap_left = np.linalg.solve(identity - P @ Q, P)
    swap_right = P @ np.linalg.inv(identity - Q @ P)
    expected_null = subspace_sum(
        range_space(Q, tol), intersect(kernel_space(P, tol), kernel_space(Q, tol), tol), tol
    )
    return KolihaReport(
        idempotent_residual=operator_norm(Pi @ Pi - Pi),
        range_matches=subspaces_equal(range_space(Pi, tol), range_space(P, tol), tol),
        nullspace_matches=subspaces_equal(kernel_space(Pi, tol), expected_null, tol),
        times_p_residual=operator_norm(Pi @ P - P),
        times_q_residual=operator_norm(Pi @ Q),
        swap_residual=operator_norm(swap_left - swap_right),
        norm_symmetry_gap=abs(operator_norm(Q @ P) - operator_norm(P @ Q)),
    )


def mp_linear_combination(
    pi1: Idempotent, pi2: Idempotent, lam: complex, tol: Tolerance = DEFAULT_TOLERANCE
) -> np.ndarray:
    """(Pi_1 + lam Pi_2)^+ as (Pi_1 + Pi_2)^+ (Pi_1 + Pi_2/lam) (Pi_1 + Pi_2)^+."""
    _check_annihilating(pi1, pi2, tol)
    if lam == 0:
        raise LambdaZeroError("lambda must be nonzero")
    base = moore_penrose(pi1.matrix + pi2.matrix, tol)
    return base @ (pi1.matrix + pi2.matrix / lam) @ base


def verify_mp_formula(
    pi1: Idempotent, pi2: Idempotent, lam: complex, tol: Tolerance = DEFAULT_TOLERANCE
) -> MPFormulaReport:
    formula = mp_linear_combination(pi1, pi2, lam, tol)
    combined = pi1.matrix + lam * pi2.matrix
    direct = moore_penrose(combined, tol)
    base_sum = pi1.matrix + pi2.matrix
    base = moore_penrose(base_sum, tol)
    p_tilde = base_sum @ base
    q_tilde = base @ base_sum

    absolute = operator_norm(formula - direct)
    direct_norm = operator_norm(direct)
    report = MPFormulaReport(
        lam=pair_of(lam),
        formula=formula,
        direct=direct,
        absolute_error=absolute,
        relative_error=absolute / direct_norm if direct_norm > 0 else absolute,
        p_tilde_residual=operator_norm(combined @ formula - p_tilde),
        q_tilde_residual=operator_norm(formula @ combined - q_tilde),
        sandwich_residuals=(
            operator_norm(pi1.matrix @ base @ pi1.matrix - pi1.matrix),
            operator_norm(pi2.matrix @ base @ pi2.matrix - pi2.matrix),
        ),
    )
    logger.debug(f"M-P formula at lambda={lam}: relative error {report.relative_error:.3e}")
    return report


def range_stability_sweep(
    pi1: Idempotent,
    pi2: Idempotent,
    lambdas=DEFAULT_LAMBDAS,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> RangeSweepReport:
    """
    dim R(Pi_1 + lam Pi_2) and its smallest positive singular value per lambda.

    For lam != 0 the dimension must not move; lam = 0 is reported but not
    held to that.
    """
    _check_separated(pi1.range, pi2.range, tol)
    reference_dim = numerical_rank(pi1.matrix + pi2.matrix, tol)
    records = []
    for lam in lambdas:
        combined = pi1.matrix + lam * pi2.matrix
        record = LambdaRecord(
            lam=pair_of(lam),
            dim_range=numerical_rank(combined, tol),
            sigma_min=min_positive_singular(combined, tol),
            in_constancy_check=lam != 0,
        )
        logger.debug(f"lambda={lam}: dim={record.dim_range}, sigma_min={record.sigma_min}")
        records.append(record)

    report = RangeSweepReport(reference_dim=reference_dim, records=records)
    if not report.constant:
        logger.error(f"Range dimension moves across nonzero lambda: {[r.dim_range for r in records]}")
        raise InternalInconsistencyError("dim R(Pi_1 + lambda Pi_2) is not constant for lambda != 0")
    return report


def check_sum_is_projection(
    pi1: Idempotent, pi2: Idempotent, tol: Tolerance = DEFAULT_TOLERANCE
) -> SumProjectionDiagnosis:
    """
    Pi_1 + Pi_2 = P~ and (Pi_1, Pi_2) = (Pi_{P,Q}, Pi_{Q,P}), for any idempotents with separated ranges.

    The pair need not annihilate. Koliha pairs always do, so a non-annihilating
    pair comes back with is_projection_sum false.
    """
    if pi1.ambient_dim != pi2.ambient_dim:
        raise ShapeMismatchError("Idempotents act on different spaces")
    _check_separated(pi1.range, pi2.range, tol)
    P, Q = projection(pi1.range), projection(pi2.range)
    p_tilde = projection(subspace_sum(pi1.range, pi2.range, tol))
    total = pi1.matrix + pi2.matrix

    diagnosis = SumProjectionDiagnosis(
        is_projection_sum=matrices_close(total, p_tilde, tol),
        deviation=operator_norm(total - p_tilde),
        pi1_is_koliha=matrices_close(pi1.matrix, koliha_idempotent(P, Q, tol).matrix, tol),
        pi2_is_koliha=matrices_close(pi2.matrix, koliha_idempotent(Q, P, tol).matrix, tol),
    )
    if diagnosis.is_projection_sum != (diagnosis.pi1_is_koliha and diagnosis.pi2_is_koliha):
        logger.error(f"Sum-is-projection verdicts disagree: {diagnosis.model_dump()}")
        raise InternalInconsistencyError("Pi_1 + Pi_2 = P~ must coincide with Pi_i being Koliha idempotents")
    return diagnosis


def uniqueness_check(a: Idempotent, b: Idempotent, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """R(b) ⊆ R(a) and N(b) ⊆ N(a); when both hold the matrices must coincide."""
    if not (contains(a.range, b.range, tol) and contains(a.nullspace, b.nullspace, tol)):
        return False
    if not matrices_close(a.matrix, b.matrix, tol):
        logger.error("Idempotents with nested ranges and nullspaces differ")
        raise InternalInconsistencyError(
            f"||a - b|| = {operator_norm(a.matrix - b.matrix):.3e} despite R(b) ⊆ R(a), N(b) ⊆ N(a)"
        )
    return True


def adjoint_decomposition_check(
    H: Subspace, K: Subspace, tol: Tolerance = DEFAULT_TOLERANCE
) -> AdjointDecompositionReport:
    """Pi_1* is the idempotent onto K⊥ ∩ (H+K) along H⊥."""
    pair = canonical_pair(H, K, tol)
    target = intersect(orth_complement(K), subspace_sum(H, K, tol), tol)
    try:
        (adjoint, _), condition = complementary_projectors([target, orth_complement(H)], tol)
    except NotSeparatedError:
        return AdjointDecompositionReport(direct_sum=False, adjoint_matches=False)
    return AdjointDecompositionReport(
        direct_sum=True,
        adjoint_matches=matrices_close(adjoint, pair.pi1.matrix.conj().T, tol),
        condition=condition,
    )
