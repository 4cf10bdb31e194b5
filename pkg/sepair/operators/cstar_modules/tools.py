from typing import Optional

import numpy as np
import scipy.optimize
from scipy.stats import norm as normal_distribution
from scipy.stats import qmc

from sepair.common.exceptions import (
    InternalInconsistencyError,
    NotAStateError,
    ShapeMismatchError,
    X0InLError,
)
from sepair.config.configs import SEED
from sepair.operators.cstar_modules.models import (
    AlgebraElement,
    ComplementLocalizationVerdict,
    ConcordanceVerdict,
    FiniteCStarAlgebra,
    IntersectionLocalizationVerdict,
    LocalizedSpace,
    ModuleVector,
    NullSpaceReport,
    SeparationWitness,
    StandardModule,
    State,
    StateCheck,
    Submodule,
)
from sepair.operators.hilbert_core.models import DEFAULT_TOLERANCE, Subspace, Tolerance
from sepair.operators.hilbert_core.tools import (
    contains,
    full_space,
    intersect,
    kernel_space,
    operator_norm,
    orth_complement,
    orthonormalize,
    projection,
    projection_distance,
    subspace_sum,
    subspaces_equal,
    zero_space,
)
from shared.logger_setup import get_logger

logger = get_logger(__name__)


def _check_same_module(*submodules: Submodule) -> StandardModule:
    module = submodules[0].module
    for other in submodules[1:]:
        if other.module != module:
            raise ShapeMismatchError("Submodules belong to different modules")
    return module


def inner_product(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    """<x, y> = sum_k x_k^* y_k."""
    if len(x.coords) != len(y.coords):
        raise ShapeMismatchError(f"Vectors have {len(x.coords)} and {len(y.coords)} coordinates")
    total = None
    for a, b in zip(x.coords, y.coords):
        if [block.shape for block in a.blocks] != [block.shape for block in b.blocks]:
            raise ShapeMismatchError("Coordinates belong to different algebras")
        term = a.adjoint() @ b
        total = term if total is None else total + term
    return total


def right_multiply(x: ModuleVector, a: AlgebraElement) -> ModuleVector:
    return ModuleVector(coords=[c @ a for c in x.coords])


def _submodule(
    module: StandardModule, flat: Subspace, tol: Tolerance, generators: Optional[list[ModuleVector]] = None
) -> Submodule:
    if generators is None:
        generators = [module.unflatten(column) for column in flat.frame.T]
    return Submodule.model_validate(
        {"module": module, "generators": generators, "flat": flat}, context={"tol": tol}
    )


def submodule_closure(
    module: StandardModule, gens: list[ModuleVector], tol: Tolerance = DEFAULT_TOLERANCE
) -> Submodule:
    """Smallest right-invariant subspace containing the generators."""
    if not gens:
        return _submodule(module, zero_space(module.dim), tol, generators=[])
    actions = module.basis_actions()
    current = orthonormalize(np.column_stack([module.flatten(g) for g in gens]), tol)
    while current.dim:
        grown = orthonormalize(
            np.hstack([current.frame] + [action @ current.frame for action in actions]), tol
        )
        if grown.dim == current.dim:
            break
        current = grown
    return _submodule(module, current, tol, generators=list(gens))


def module_orth_complement(H: Submodule, tol: Tolerance = DEFAULT_TOLERANCE) -> Submodule:
    """{x : <x, g> = 0 for every g in H}."""
    module = H.module
    complement = _submodule(module, orth_complement(H.flat), tol)
    if not _module_orthogonal(module, complement.flat, H.flat, tol):
        logger.error("Flat complement is not A-orthogonal to the submodule")
        raise InternalInconsistencyError("Orthogonal complement fails <x, g> = 0")
    return complement


def _module_orthogonal(module: StandardModule, S: Subspace, T: Subspace, tol: Tolerance) -> bool:
    """<x, y> = 0 in A for x in S, y in T: every entry of <x, y> is a flat product against y b."""
    if S.dim == 0 or T.dim == 0:
        return True
    return all(
        operator_norm(S.frame.conj().T @ action @ T.frame) <= tol.eq_abs
        for action in module.basis_actions()
    )


def is_orthogonally_complemented(H: Submodule, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    complement = module_orth_complement(H, tol)
    return _module_orthogonal(H.module, H.flat, complement.flat, tol) and (
        H.dim + complement.dim == H.module.dim
    )


def submodule_sum(H: Submodule, K: Submodule, tol: Tolerance = DEFAULT_TOLERANCE) -> Submodule:
    module = _check_same_module(H, K)
    flat = subspace_sum(H.flat, K.flat, tol)
    return _submodule(module, flat, tol, generators=H.generators + K.generators)


def submodule_intersection(H: Submodule, K: Submodule, tol: Tolerance = DEFAULT_TOLERANCE) -> Submodule:
    module = _check_same_module(H, K)
    return _submodule(module, intersect(H.flat, K.flat, tol), tol)


def whole_module(module: StandardModule, tol: Tolerance = DEFAULT_TOLERANCE) -> Submodule:
    return _submodule(module, full_space(module.dim), tol)


def module_norm(module: StandardModule, x: ModuleVector) -> float:
    """||x|| = ||<x, x>||^{1/2}."""
    return float(np.sqrt(inner_product(x, x).norm()))


def is_concordant(H: Submodule, K: Submodule, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """E = (H ∩ K) ⊕ (H⊥ + K⊥) orthogonally."""
    module = _check_same_module(H, K)
    meet = intersect(H.flat, K.flat, tol)
    complements = subspace_sum(orth_complement(H.flat), orth_complement(K.flat), tol)
    orthogonal = (
        operator_norm(meet.frame.conj().T @ complements.frame) <= tol.eq_abs
        if meet.dim and complements.dim
        else True
    )
    return orthogonal and meet.dim + complements.dim == module.dim


def make_state(densities) -> State:
    return State(densities=[np.asarray(rho, dtype=np.complex128) for rho in densities])


def check_state(algebra: FiniteCStarAlgebra, f: State, tol: Tolerance = DEFAULT_TOLERANCE) -> None:
    shapes = [rho.shape[0] for rho in f.densities]
    if shapes != algebra.block_dims:
        raise NotAStateError(f"Density sizes {shapes} do not match block_dims {algebra.block_dims}")
    trace = 0.0
    for i, rho in enumerate(f.densities):
        if np.linalg.norm(rho - rho.conj().T, 2) > tol.eq_abs:
            raise NotAStateError(f"Density {i} is not self-adjoint")
        if np.min(np.linalg.eigvalsh(rho)) < -tol.eq_abs:
            raise NotAStateError(f"Density {i} is not positive semidefinite")
        trace += np.trace(rho).real
    if abs(trace - 1.0) > tol.eq_abs:
        raise NotAStateError(f"Total trace is {trace!r}, expected 1")


def faithful_state(algebra: FiniteCStarAlgebra) -> State:
    """Normalized trace over all blocks."""
    total = sum(algebra.block_dims)
    return make_state([np.eye(n) / total for n in algebra.block_dims])


def pure_state(algebra: FiniteCStarAlgebra, block: int, xi) -> State:
    """The vector state a -> <a_block xi, xi>."""
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape != (algebra.block_dims[block],):
        raise ShapeMismatchError(f"Vector of shape {xi.shape} for a block of size {algebra.block_dims[block]}")
    length = np.linalg.norm(xi)
    if length == 0:
        raise NotAStateError("Pure state vector must be nonzero")
    xi = xi / length
    densities = [np.zeros((n, n), dtype=np.complex128) for n in algebra.block_dims]
    densities[block] = np.outer(xi, xi.conj())
    return make_state(densities)


def matrix_unit_pure_states(algebra: FiniteCStarAlgebra) -> list[State]:
    """One vector state per standard basis vector of every block."""
    return [
        pure_state(algebra, i, np.eye(n)[p])
        for i, n in enumerate(algebra.block_dims)
        for p in range(n)
    ]


def random_pure_state(algebra: FiniteCStarAlgebra, rng: np.random.Generator) -> State:
    block = int(rng.integers(len(algebra.block_dims)))
    n = algebra.block_dims[block]
    return pure_state(algebra, block, rng.standard_normal(n) + 1j * rng.standard_normal(n))


def random_state(algebra: FiniteCStarAlgebra, rng: np.random.Generator) -> State:
    """A random mixed state with full-rank densities."""
    densities = []
    for n in algebra.block_dims:
        root = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        densities.append(root @ root.conj().T)
    total = sum(np.trace(rho).real for rho in densities)
    return make_state([rho / total for rho in densities])


def state_family(
    algebra: FiniteCStarAlgebra, random_pure: int = 0, rng: Optional[np.random.Generator] = None
) -> list[State]:
    """Faithful state, every matrix-unit pure state, then `random_pure` random pure states."""
    states = [faithful_state(algebra)] + matrix_unit_pure_states(algebra)
    if random_pure:
        rng = rng if rng is not None else np.random.default_rng(SEED)
        states += [random_pure_state(algebra, rng) for _ in range(random_pure)]
    return states


def is_detecting_family(algebra: FiniteCStarAlgebra, states: list[State], tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """
    True when `states` holds a faithful state and, for every block, a pure
    state supported on that block.

    This is the family `state_family` builds. Whether the states span the
    state space is not checked.
    """
    has_faithful = any(
        all(np.min(np.linalg.eigvalsh(rho)) > tol.eq_abs for rho in f.densities) for f in states
    )
    covered = {f.support(tol.eq_abs)[0] for f in states if f.is_pure(tol.eq_abs)}
    return has_faithful and covered == set(range(len(algebra.block_dims)))


def pure_state_grid(algebra: FiniteCStarAlgebra, per_block: int, seed: int = SEED) -> list[tuple[int, np.ndarray]]:
    """
    Deterministic pure states as (block, unit vector) pairs.

    Each block contributes its standard basis vectors first, then
    scrambled Halton points pushed through the normal quantile function and
    normalized, up to `per_block` vectors. One-dimensional blocks have a
    single pure state.
    """
    grid = []
    for i, n in enumerate(algebra.block_dims):
        if n == 1:
            grid.append((i, np.ones(1, dtype=np.complex128)))
            continue
        vectors = [np.eye(n, dtype=np.complex128)[p] for p in range(min(n, per_block))]
        extra = per_block - len(vectors)
        if extra > 0:
            sampler = qmc.Halton(d=2 * n, scramble=True, seed=seed + i)
            points = sampler.random(extra)
            gaussian = normal_distribution.ppf(np.clip(points, 1e-12, 1 - 1e-12))
            for row in gaussian:
                xi = row[:n] + 1j * row[n:]
                vectors.append(xi / np.linalg.norm(xi))
        grid.extend((i, xi) for xi in vectors)
    return grid


def _localize_gram(gram: np.ndarray, tol: Tolerance) -> LocalizedSpace:
    eigenvalues, vectors = np.linalg.eigh(gram)
    if eigenvalues.size and eigenvalues[-1] > tol.eq_abs:
        keep = eigenvalues > tol.rank_rel * eigenvalues[-1]
    else:
        keep = np.zeros(eigenvalues.shape, dtype=bool)
    kept_values, kept_vectors = eigenvalues[keep][::-1], vectors[:, keep][:, ::-1]
    quotient_map = np.sqrt(kept_values)[:, None] * kept_vectors.conj().T
    return LocalizedSpace(gram=gram, quotient_map=quotient_map, dim=int(keep.sum()))


def localize(module: StandardModule, f: State, tol: Tolerance = DEFAULT_TOLERANCE) -> LocalizedSpace:
    """E_f with <iota_f x, iota_f y> = f(<x, y>)."""
    check_state(module.algebra, f, tol)
    localized = _localize_gram(module.state_gram(f.densities), tol)
    logger.debug(f"Localized E (dim {module.dim}) at a state: dim E_f = {localized.dim}")
    return localized


def localize_submodule(H: Submodule, L: LocalizedSpace, tol: Tolerance = DEFAULT_TOLERANCE) -> Subspace:
    """H_f: the image of H in E_f."""
    if L.gram.shape[0] != H.module.dim:
        raise ShapeMismatchError("Localized space and submodule belong to different modules")
    if H.dim == 0 or L.dim == 0:
        return zero_space(L.dim)
    image = L.quotient_map @ H.flat.frame
    return orthonormalize(image, tol)


def null_space_characterizations(
    module: StandardModule, f: State, tol: Tolerance = DEFAULT_TOLERANCE
) -> NullSpaceReport:
    localized = localize(module, f, tol)
    quadratic = kernel_space(localized.quotient_map, tol) if localized.dim else full_space(module.dim)
    bilinear = kernel_space(localized.gram, tol)
    return NullSpaceReport(
        dim_quadratic=quadratic.dim,
        dim_bilinear=bilinear.dim,
        equal=subspaces_equal(quadratic, bilinear, tol),
    )


def norming_state(module: StandardModule, x: ModuleVector) -> State:
    """A pure state with f(<x, x>) = ||x||^2."""
    value = inner_product(x, x)
    best_block, best_value, best_vector = 0, -np.inf, None
    for i, block in enumerate(value.blocks):
        eigenvalues, vectors = np.linalg.eigh(block)
        if eigenvalues[-1] > best_value:
            best_block, best_value, best_vector = i, eigenvalues[-1], vectors[:, -1]
    return pure_state(module.algebra, best_block, best_vector)


def _compare(index: int, left: Subspace, right: Subspace, tol: Tolerance) -> StateCheck:
    distance = projection_distance(left, right)
    return StateCheck(state_index=index, equal=subspaces_equal(left, right, tol), distance=distance)


def check_complement_localization(
    H: Submodule, states: list[State], tol: Tolerance = DEFAULT_TOLERANCE
) -> ComplementLocalizationVerdict:
    """(H_f)⊥ = (H⊥)_f inside E_f for each state."""
    complement = module_orth_complement(H, tol)
    checks = []
    for index, f in enumerate(states):
        localized = localize(H.module, f, tol)
        left = orth_complement(localize_submodule(H, localized, tol))
        right = localize_submodule(complement, localized, tol)
        checks.append(_compare(index, left, right, tol))

    verdict = ComplementLocalizationVerdict(
        checks=checks, complemented=is_orthogonally_complemented(H, tol)
    )
    if verdict.complemented and not verdict.all_equal:
        logger.error(f"Complement localization fails at states {[c.state_index for c in checks if not c.equal]}")
        raise InternalInconsistencyError("(H_f)⊥ != (H⊥)_f for a complemented submodule")
    return verdict


def check_concordance_via_states(
    H: Submodule, K: Submodule, states: list[State], tol: Tolerance = DEFAULT_TOLERANCE
) -> ConcordanceVerdict:
    """(H∩K)_f = ((H⊥)_f)⊥ ∩ ((K⊥)_f)⊥ for each state."""
    module = _check_same_module(H, K)
    meet = submodule_intersection(H, K, tol)
    H_perp, K_perp = module_orth_complement(H, tol), module_orth_complement(K, tol)
    checks = []
    for index, f in enumerate(states):
        localized = localize(module, f, tol)
        left = localize_submodule(meet, localized, tol)
        right = intersect(
            orth_complement(localize_submodule(H_perp, localized, tol)),
            orth_complement(localize_submodule(K_perp, localized, tol)),
            tol,
        )
        checks.append(_compare(index, left, right, tol))

    verdict = ConcordanceVerdict(
        checks=checks,
        concordant=is_concordant(H, K, tol),
        detecting_family=is_detecting_family(module.algebra, states, tol),
    )
    if verdict.detecting_family and not verdict.agrees:
        logger.error(f"Concordance verdicts disagree: structural={verdict.concordant}, states={verdict.all_equal}")
        raise InternalInconsistencyError("State-wise concordance disagrees with the structural verdict")
    return verdict


def check_intersection_localization(
    H: Submodule, K: Submodule, states: list[State], tol: Tolerance = DEFAULT_TOLERANCE
) -> IntersectionLocalizationVerdict:
    """(H∩K)_f = H_f ∩ K_f for each state; enforced only for concordant pairs."""
    module = _check_same_module(H, K)
    meet = submodule_intersection(H, K, tol)
    checks = []
    for index, f in enumerate(states):
        localized = localize(module, f, tol)
        left = localize_submodule(meet, localized, tol)
        right = intersect(
            localize_submodule(H, localized, tol), localize_submodule(K, localized, tol), tol
        )
        checks.append(_compare(index, left, right, tol))

    verdict = IntersectionLocalizationVerdict(checks=checks, concordant=is_concordant(H, K, tol))
    if verdict.concordant and not verdict.all_equal:
        logger.error("Intersection localization fails for a concordant pair")
        raise InternalInconsistencyError("(H∩K)_f != H_f ∩ K_f for a concordant pair")
    return verdict


def check_lemma_equal(
    H: Submodule, K: Submodule, states: list[State], tol: Tolerance = DEFAULT_TOLERANCE
) -> bool:
    """
    Whether H_f = K_f for every state in `states`.

    When the family is detecting and the localizations all agree, H and K
    must coincide.
    """
    module = _check_same_module(H, K)
    for f in states:
        localized = localize(module, f, tol)
        if not subspaces_equal(localize_submodule(H, localized, tol), localize_submodule(K, localized, tol), tol):
            return False
    if is_detecting_family(module.algebra, states, tol) and not subspaces_equal(H.flat, K.flat, tol):
        logger.error("Equal localizations over a detecting family but different submodules")
        raise InternalInconsistencyError("H_f = K_f for every state but H != K")
    return True


def _pure_distance(module: StandardModule, L: Submodule, x0: np.ndarray, block: int, xi: np.ndarray, tol: Tolerance) -> float:
    localized = localize(module, pure_state(module.algebra, block, xi), tol)
    if localized.dim == 0:
        return 0.0
    image = localized.quotient_map @ x0
    L_f = localize_submodule(L, localized, tol)
    return float(np.linalg.norm(image - projection(L_f) @ image))


def find_separating_state(
    L: Submodule,
    x0: ModuleVector,
    tol: Tolerance = DEFAULT_TOLERANCE,
    per_block: int = 16,
    refine_iters: int = 100,
    seed: int = SEED,
) -> Optional[SeparationWitness]:
    """
    A pure state f with dist(iota_f(x0), L_f) > eq_abs, or None if the scan finds none.

    None means the budget ran out, not that no such state exists.
    """
    module = L.module
    flat_x0 = module.flatten(x0)
    if contains(L.flat, orthonormalize(flat_x0[:, None], tol), tol):
        raise X0InLError("x0 lies in L")

    evaluations = 0
    scored = []
    for block, xi in pure_state_grid(module.algebra, per_block, seed):
        distance = _pure_distance(module, L, flat_x0, block, xi, tol)
        evaluations += 1
        scored.append((distance, block, xi))
        if distance > tol.eq_abs:
            logger.info(f"Separating pure state found on block {block} after {evaluations} evaluations")
            return SeparationWitness(
                state=pure_state(module.algebra, block, xi), distance=distance, evaluations=evaluations, block=block
            )

    # Nothing on the grid: climb from the best candidate on each block
    best_per_block = {}
    for distance, block, xi in scored:
        if block not in best_per_block or distance > best_per_block[block][0]:
            best_per_block[block] = (distance, xi)
    for block, (_, xi) in sorted(best_per_block.items()):
        n = module.algebra.block_dims[block]
        if n == 1:
            continue

        def objective(params: np.ndarray) -> float:
            candidate = params[:n] + 1j * params[n:]
            if np.linalg.norm(candidate) == 0:
                return 0.0
            return -_pure_distance(module, L, flat_x0, block, candidate, tol)

        result = scipy.optimize.minimize(
            objective,
            np.concatenate([xi.real, xi.imag]),
            method="Nelder-Mead",
            options={"maxiter": refine_iters, "xatol": 1e-10, "fatol": 1e-14},
        )
        evaluations += int(result.nfev)
        if -result.fun > tol.eq_abs:
            candidate = result.x[:n] + 1j * result.x[n:]
            return SeparationWitness(
                state=pure_state(module.algebra, block, candidate),
                distance=float(-result.fun),
                evaluations=evaluations,
                block=block,
            )

    logger.warning(f"No separating state found within {evaluations} evaluations (inconclusive)")
    return None
