from typing import Callable, Optional

import numpy as np
import scipy.optimize

from sepair.common.exceptions import InternalInconsistencyError, PreconditionFailedError
from sepair.config.configs import INEQUALITY_SAMPLES, SEPARATION_MARGIN, ZERO_ANGLE_TOL
from sepair.operators.cstar_modules.models import State, Submodule
from sepair.operators.cstar_modules.tools import (
    _check_same_module,
    is_concordant,
    is_orthogonally_complemented,
    is_detecting_family,
    localize,
    localize_submodule,
    module_norm,
    module_orth_complement,
    norming_state,
    pure_state,
    pure_state_grid,
    random_state,
    submodule_intersection,
    submodule_sum,
)
from sepair.operators.hilbert_core.models import DEFAULT_TOLERANCE, Subspace, Tolerance
from sepair.operators.hilbert_core.tools import (
    intersect,
    matrices_close,
    projection,
    subspace_sum,
    subspaces_equal,
)
from sepair.operators.local_angles.models import (
    AlphaComplementVerdict,
    AngleEstimate,
    AngleKind,
    ChainCheck,
    CommutationBridgeVerdict,
    CommutationCheck,
    InequalityChainVerdict,
    InequalityCheck,
    LandscapePoint,
    OptimizerBudget,
    SeparationFromAlphaVerdict,
    ZeroAngleVerdict,
)
from sepair.operators.subspace_pairs.tools import dixmier_cosine, friedrichs_cosine, is_separated
from shared.logger_setup import get_logger

logger = get_logger(__name__)

STALL_WINDOW = 50
STALL_RELATIVE = 1e-6


def module_dixmier_cosine(H: Submodule, K: Submodule) -> float:
    """c0(H, K) = ||P_H P_K|| on the flat representation."""
    _check_same_module(H, K)
    return dixmier_cosine(H.flat, K.flat)


def module_friedrichs_cosine(H: Submodule, K: Submodule, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """c(H, K) = ||P_H P_K - P_{H∩K}|| on the flat representation."""
    _check_same_module(H, K)
    for name, S in (("H", H), ("K", K), ("H ∩ K", submodule_intersection(H, K, tol))):
        if not is_orthogonally_complemented(S, tol):
            raise PreconditionFailedError(f"{name} is not orthogonally complemented")
    return friedrichs_cosine(H.flat, K.flat, tol)


def _cosine(S: Subspace, T: Subspace, kind: AngleKind, tol: Tolerance) -> float:
    if S.dim == 0 or T.dim == 0:
        return 0.0
    if kind == "dixmier":
        return dixmier_cosine(S, T)
    return friedrichs_cosine(S, T, tol)


def localized_cosine(
    H: Submodule, K: Submodule, f: State, kind: AngleKind = "friedrichs", tol: Tolerance = DEFAULT_TOLERANCE
) -> float:
    """c(H_f, K_f) or c0(H_f, K_f); degenerate localizations give 0."""
    module = _check_same_module(H, K)
    localized = localize(module, f, tol)
    return _cosine(localize_submodule(H, localized, tol), localize_submodule(K, localized, tol), kind, tol)


def _stalled(trace: list[float]) -> bool:
    if len(trace) <= STALL_WINDOW:
        return False
    before, after = trace[-STALL_WINDOW - 1], trace[-1]
    return after - before <= STALL_RELATIVE * max(abs(before), 1e-12)


def _refine(
    evaluate: Callable[[int, np.ndarray], float], block: int, xi: np.ndarray, iterations: int
) -> tuple[float, np.ndarray, int, bool]:
    """Nelder-Mead on the real coordinates of xi; returns (value, unit vector, evaluations, converged)."""
    n = xi.shape[0]
    best_seen = [0.0]
    trace: list[float] = []

    def objective(params: np.ndarray) -> float:
        candidate = params[:n] + 1j * params[n:]
        if np.linalg.norm(candidate) == 0:
            return 0.0
        value = evaluate(block, candidate)
        best_seen[0] = max(best_seen[0], value)
        return -value

    result = scipy.optimize.minimize(
        objective,
        np.concatenate([xi.real, xi.imag]),
        method="Nelder-Mead",
        callback=lambda _: trace.append(best_seen[0]),
        options={"maxiter": iterations, "xatol": 1e-10, "fatol": 1e-12},
    )
    candidate = result.x[:n] + 1j * result.x[n:]
    if np.linalg.norm(candidate) == 0:
        return 0.0, xi, int(result.nfev), bool(result.success)
    return float(-result.fun), candidate / np.linalg.norm(candidate), int(result.nfev), bool(result.success) or _stalled(trace)


def local_angle(
    H: Submodule,
    K: Submodule,
    kind: AngleKind = "friedrichs",
    budget: Optional[OptimizerBudget] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
    record_landscape: bool = False,
) -> AngleEstimate:
    """
    Estimate sup_f c(H_f, K_f) (kind="friedrichs") or sup_f c0(H_f, K_f) (kind="dixmier").

    A deterministic grid of pure states is scanned first; the best
    `budget.starts` grid points are then refined with Nelder-Mead over
    the unit sphere of their block. The returned value is recomputed at
    argmax_state, so it is attained there and is a lower bound for the
    supremum. Ties keep the lowest grid index.
    """
    budget = budget or OptimizerBudget()
    module = _check_same_module(H, K)
    algebra = module.algebra

    def evaluate(block: int, xi: np.ndarray) -> float:
        return localized_cosine(H, K, pure_state(algebra, block, xi), kind, tol)

    landscape = [
        LandscapePoint(index=index, block=block, xi=xi, value=evaluate(block, xi))
        for index, (block, xi) in enumerate(pure_state_grid(algebra, budget.grid, budget.seed))
    ]
    evaluations = len(landscape)
    ranked = sorted(landscape, key=lambda point: (-point.value, point.index))
    best_value, best_block, best_xi = ranked[0].value, ranked[0].block, np.asarray(ranked[0].xi)

    converged = True
    for start, point in enumerate(ranked[: budget.starts]):
        if algebra.block_dims[point.block] == 1 or budget.refine_iters == 0:
            continue
        value, xi, nfev, stalled = _refine(evaluate, point.block, np.asarray(point.xi), budget.refine_iters)
        evaluations += nfev
        converged = converged and stalled
        logger.debug(f"Start {start} on block {point.block}: {point.value:.6g} -> {value:.6g} ({nfev} evaluations)")
        if value > best_value:
            best_value, best_block, best_xi = value, point.block, xi

    argmax_state = pure_state(algebra, best_block, best_xi)
    value = localized_cosine(H, K, argmax_state, kind, tol)

    rng = np.random.default_rng(budget.seed)
    mixed = [localized_cosine(H, K, random_state(algebra, rng), kind, tol) for _ in range(budget.mixed_samples)]
    mixed_state_max = max(mixed) if mixed else None
    flagged = mixed_state_max is not None and mixed_state_max > value + budget.tolerance
    if flagged:
        logger.warning(f"Mixed state reaches {mixed_state_max:.6g}, above the pure-state estimate {value:.6g}")

    logger.info(f"Local {kind} cosine estimate {value:.6g} on block {best_block} after {evaluations} evaluations")
    return AngleEstimate(
        kind=kind,
        value=value,
        argmax_state=argmax_state,
        argmax_block=best_block,
        iterations=evaluations,
        converged=converged,
        grid_size=len(landscape),
        mixed_state_max=mixed_state_max,
        flagged=flagged,
        landscape=landscape if record_landscape else [],
    )


def _require_concordant(H: Submodule, K: Submodule, label: str, tol: Tolerance) -> None:
    if not is_concordant(H, K, tol):
        raise PreconditionFailedError(f"{label} is not concordant")


def _require_complemented_sum(H: Submodule, K: Submodule, tol: Tolerance) -> None:
    if not is_orthogonally_complemented(submodule_sum(H, K, tol), tol):
        raise PreconditionFailedError("closure(H + K) is not orthogonally complemented")


def check_alpha_complement(
    H: Submodule, K: Submodule, budget: Optional[OptimizerBudget] = None, tol: Tolerance = DEFAULT_TOLERANCE
) -> AlphaComplementVerdict:
    """alpha(H, K) = alpha(H⊥, K⊥) for concordant pairs, each side optimized independently."""
    budget = budget or OptimizerBudget()
    _require_concordant(H, K, "(H, K)", tol)
    _require_complemented_sum(H, K, tol)

    alpha = local_angle(H, K, "friedrichs", budget, tol).value
    alpha_complement = local_angle(
        module_orth_complement(H, tol), module_orth_complement(K, tol), "friedrichs", budget, tol
    ).value
    verdict = AlphaComplementVerdict(
        alpha=alpha,
        alpha_complement=alpha_complement,
        difference=abs(alpha - alpha_complement),
        tolerance=budget.tolerance,
    )
    if not verdict.holds:
        logger.error(f"alpha(H, K) = {alpha:.6g} but alpha(H⊥, K⊥) = {alpha_complement:.6g}")
        raise InternalInconsistencyError("Local Friedrichs angles of a concordant pair and its complements differ")
    return verdict


def check_zero_angle_theorem(
    H: Submodule,
    K: Submodule,
    budget: Optional[OptimizerBudget] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
    zero_tol: float = ZERO_ANGLE_TOL,
) -> ZeroAngleVerdict:
    """alpha(H, K) = 0 exactly when H = (H∩K) + (H∩K⊥)."""
    _require_concordant(H, K, "(H, K)", tol)
    K_perp = module_orth_complement(K, tol)
    _require_concordant(H, K_perp, "(H, K⊥)", tol)
    _require_complemented_sum(H, K, tol)

    alpha = local_angle(H, K, "friedrichs", budget, tol).value
    lattice = subspace_sum(intersect(H.flat, K.flat, tol), intersect(H.flat, K_perp.flat, tol), tol)
    verdict = ZeroAngleVerdict(
        alpha=alpha,
        zero_angle=alpha <= zero_tol,
        lattice_identity=subspaces_equal(H.flat, lattice, tol),
    )
    if not verdict.agree:
        logger.error(f"alpha = {alpha:.3e} but lattice identity is {verdict.lattice_identity}")
        raise InternalInconsistencyError("Zero local angle and the lattice identity disagree")
    return verdict


def check_separation_from_alpha0(
    H: Submodule,
    K: Submodule,
    budget: Optional[OptimizerBudget] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
    margin: float = SEPARATION_MARGIN,
    samples: int = INEQUALITY_SAMPLES,
) -> SeparationFromAlphaVerdict:
    """
    alpha0(H, K) < 1 - margin implies that (H, K) is separated.

    Also spot-checks, for sampled x in H and y in K with a norming state f0
    of x, the bound ||x+y||^2 >= (||x|| - s)^2 + 2(1 - a)||x|| s where
    s = f0<y,y>^{1/2} and a is the larger of the estimate and c0(H_f0, K_f0).
    """
    budget = budget or OptimizerBudget()
    module = _check_same_module(H, K)
    _require_concordant(module_orth_complement(H, tol), module_orth_complement(K, tol), "(H⊥, K⊥)", tol)

    alpha0 = local_angle(H, K, "dixmier", budget, tol).value
    checks = []
    if H.dim and K.dim:
        rng = np.random.default_rng(budget.seed)
        for _ in range(samples):
            flat_x = H.flat.frame @ (rng.standard_normal(H.dim) + 1j * rng.standard_normal(H.dim))
            flat_y = K.flat.frame @ (rng.standard_normal(K.dim) + 1j * rng.standard_normal(K.dim))
            x, y = module.unflatten(flat_x), module.unflatten(flat_y)
            f0 = norming_state(module, x)
            norm_x = module_norm(module, x)
            s = float(np.sqrt(max(np.real(flat_y.conj() @ module.state_gram(f0.densities) @ flat_y), 0.0)))
            a = max(alpha0, localized_cosine(H, K, f0, "dixmier", tol))
            checks.append(
                InequalityCheck(
                    lhs=module_norm(module, module.unflatten(flat_x + flat_y)) ** 2,
                    rhs=(norm_x - s) ** 2 + 2 * (1 - a) * norm_x * s,
                    alpha0=a,
                )
            )
    violated = [check for check in checks if check.slack < -tol.eq_abs * max(1.0, check.lhs)]
    if violated:
        logger.error(f"{len(violated)} sampled pairs break the norming-state bound")
        raise InternalInconsistencyError("||x+y||^2 lower bound fails at the norming state")

    verdict = SeparationFromAlphaVerdict(
        alpha0=alpha0,
        margin=margin,
        separated=is_separated(H.flat, K.flat, tol).separated,
        inequality_checks=checks,
    )
    if not verdict.implication_holds:
        logger.error(f"alpha0 = {alpha0:.6g} < 1 - {margin} but the pair is not separated")
        raise InternalInconsistencyError("alpha0 < 1 without separation")
    if not verdict.below_margin:
        logger.debug(f"alpha0 = {alpha0:.6g} is not below 1 - {margin}; implication is vacuous")
    return verdict


def commutation_bridge(
    H: Submodule,
    K: Submodule,
    states: list[State],
    budget: Optional[OptimizerBudget] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
    zero_tol: float = ZERO_ANGLE_TOL,
) -> CommutationBridgeVerdict:
    """
    Per state: P_{H_f} and P_{K_f} commute iff P_{H_f} P_{K_f} = P_{H_f ∩ K_f}.

    When every state commutes the local Friedrichs estimate is computed; over
    a detecting family it has to vanish.
    """
    module = _check_same_module(H, K)
    checks = []
    for index, f in enumerate(states):
        localized = localize(module, f, tol)
        H_f, K_f = localize_submodule(H, localized, tol), localize_submodule(K, localized, tol)
        P, Q = projection(H_f), projection(K_f)
        check = CommutationCheck(
            state_index=index,
            commute=matrices_close(P @ Q, Q @ P, tol),
            product_is_meet=matrices_close(P @ Q, projection(intersect(H_f, K_f, tol)), tol),
        )
        if check.commute != check.product_is_meet:
            logger.error(f"State {index}: commute={check.commute}, product_is_meet={check.product_is_meet}")
            raise InternalInconsistencyError("Commuting projections disagree with P_M P_N = P_{M∩N}")
        checks.append(check)

    verdict = CommutationBridgeVerdict(checks=checks)
    if not verdict.all_commute:
        return verdict
    alpha = local_angle(H, K, "friedrichs", budget, tol).value
    if alpha > zero_tol and is_detecting_family(module.algebra, states, tol):
        logger.error(f"Projections commute at every state of a detecting family but alpha = {alpha:.3e}")
        raise InternalInconsistencyError("Commuting localizations with a nonzero local angle")
    return CommutationBridgeVerdict(checks=checks, alpha=alpha)


def check_inequality_chain(
    H: Submodule, K: Submodule, states: list[State], tol: Tolerance = DEFAULT_TOLERANCE
) -> InequalityChainVerdict:
    """c((H⊥)_f, (K⊥)_f) >= c(H_f, K_f) at every state, for a concordant pair."""
    module = _check_same_module(H, K)
    _require_concordant(H, K, "(H, K)", tol)
    H_perp, K_perp = module_orth_complement(H, tol), module_orth_complement(K, tol)
    checks = [
        ChainCheck(
            state_index=index,
            localized=localized_cosine(H, K, f, "friedrichs", tol),
            complemented=localized_cosine(H_perp, K_perp, f, "friedrichs", tol),
        )
        for index, f in enumerate(states)
    ]
    verdict = InequalityChainVerdict(checks=checks, eq_abs=tol.eq_abs)
    if not verdict.holds:
        logger.error("c((H⊥)_f, (K⊥)_f) < c(H_f, K_f) at some state of a concordant pair")
        raise InternalInconsistencyError("Inequality chain fails")
    logger.debug(f"Inequality chain holds at {len(checks)} states ({module.algebra.block_dims})")
    return verdict
