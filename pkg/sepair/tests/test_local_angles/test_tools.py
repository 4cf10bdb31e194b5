import numpy as np
import pytest
import scipy.linalg

from sepair.common.exceptions import PreconditionFailedError
from sepair.operators.cstar_modules.models import FiniteCStarAlgebra, ModuleVector, StandardModule
from sepair.operators.cstar_modules.tools import (
    faithful_state,
    module_orth_complement,
    state_family,
    submodule_closure,
)
from sepair.operators.local_angles.models import AngleEstimate, OptimizerBudget
from sepair.operators.local_angles.tools import (
    check_alpha_complement,
    check_inequality_chain,
    check_separation_from_alpha0,
    check_zero_angle_theorem,
    commutation_bridge,
    local_angle,
    localized_cosine,
    module_dixmier_cosine,
    module_friedrichs_cosine,
)
from sepair.operators.subspace_pairs.tools import dixmier_cosine, friedrichs_cosine
from sepair.tests.conftest import complex_gaussian, random_module_vector

M2_PLUS_M3 = FiniteCStarAlgebra(block_dims=[2, 3])
FAST = OptimizerBudget(grid=4, refine_iters=30, starts=2, mixed_samples=2)


def _unit_vector(module, coordinate, block, p):
    coords = [module.algebra.zero() for _ in range(module.m)]
    coords[coordinate] = module.algebra.matrix_unit(block, p, p)
    return ModuleVector(coords=coords)


def _aligned_submodule(module, rng, tol):
    """Generated by diagonal matrix units, so flat projections are coordinate-aligned."""
    gens = [
        _unit_vector(module, k, i, p)
        for k in range(module.m)
        for i, n in enumerate(module.algebra.block_dims)
        for p in range(n)
        if rng.random() < 0.5
    ]
    return submodule_closure(module, gens, tol)


def _rank_one_submodule(module, rng, tol):
    """One generator whose blocks share a right factor: the localized image is a line on every block."""
    m, blocks = module.m, module.algebra.block_dims
    stacked = [complex_gaussian(rng, m * n) for n in blocks]
    right = [complex_gaussian(rng, n) for n in blocks]
    coords = [
        module.algebra.element(
            [np.outer(stacked[i][k * n : (k + 1) * n], right[i].conj()) for i, n in enumerate(blocks)]
        )
        for k in range(m)
    ]
    return submodule_closure(module, [ModuleVector(coords=coords)], tol)


def _random_submodule(module, rng, tol):
    return submodule_closure(module, [random_module_vector(module, rng) for _ in range(int(rng.integers(1, 3)))], tol)


@pytest.fixture
def module():
    return StandardModule(algebra=M2_PLUS_M3, m=2)


def test_module_dixmier_cosine_examples(module, rng, tol):
    H = _aligned_submodule(module, rng, tol)
    assert module_dixmier_cosine(H, module_orth_complement(H, tol)) == pytest.approx(0.0, abs=1e-12)
    if H.dim:
        assert module_dixmier_cosine(H, H) == pytest.approx(1.0)


def test_module_dixmier_cosine_on_block_algebra(tol):
    algebra = FiniteCStarAlgebra(block_dims=[1, 1])
    module = StandardModule(algebra=algebra, m=2)
    H = submodule_closure(module, [ModuleVector(coords=[algebra.element([[[1]], [[0]]]), algebra.element([[[1]], [[1]]])])], tol)
    K = submodule_closure(module, [ModuleVector(coords=[algebra.element([[[1]], [[1]]]), algebra.element([[[0]], [[1]]])])], tol)
    expected = np.cos(np.min(scipy.linalg.subspace_angles(H.flat.frame, K.flat.frame)))
    assert module_dixmier_cosine(H, K) == pytest.approx(expected)
    assert module_friedrichs_cosine(H, K, tol) <= module_dixmier_cosine(H, K) + 1e-12


def test_module_friedrichs_cosine_of_nested_pair(module, rng, tol):
    g1, g2 = random_module_vector(module, rng), random_module_vector(module, rng)
    H = submodule_closure(module, [g1, g2], tol)
    K = submodule_closure(module, [g1], tol)
    assert module_friedrichs_cosine(H, K, tol) == pytest.approx(0.0, abs=1e-9)


def test_module_friedrichs_cosine_requires_complemented_submodules(module, rng, tol, monkeypatch):
    H = _random_submodule(module, rng, tol)
    monkeypatch.setattr("sepair.operators.local_angles.tools.is_orthogonally_complemented", lambda *args: False)
    with pytest.raises(PreconditionFailedError):
        module_friedrichs_cosine(H, H, tol)


def test_local_angle_of_orthogonal_pair(module, rng, tol):
    H = _random_submodule(module, rng, tol)
    estimate = local_angle(H, module_orth_complement(H, tol), "friedrichs", FAST, tol)
    assert estimate.value == pytest.approx(0.0, abs=1e-12)
    assert local_angle(H, module_orth_complement(H, tol), "dixmier", FAST, tol).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["friedrichs", "dixmier"])
def test_local_angle_on_scalar_algebra_is_the_flat_angle(rng, tol, kind):
    module = StandardModule(algebra=FiniteCStarAlgebra(block_dims=[1]), m=6)
    for _ in range(10):
        H, K = _random_submodule(module, rng, tol), _random_submodule(module, rng, tol)
        estimate = local_angle(H, K, kind, FAST, tol)
        flat = friedrichs_cosine(H.flat, K.flat, tol) if kind == "friedrichs" else dixmier_cosine(H.flat, K.flat)
        assert estimate.value == pytest.approx(flat, abs=1e-12)
        assert estimate.grid_size == 1


def test_local_angle_value_is_attained_at_argmax_state(module, rng, tol):
    for _ in range(5):
        H, K = _rank_one_submodule(module, rng, tol), _rank_one_submodule(module, rng, tol)
        for kind in ("friedrichs", "dixmier"):
            estimate = local_angle(H, K, kind, FAST, tol)
            assert abs(localized_cosine(H, K, estimate.argmax_state, kind, tol) - estimate.value) <= 1e-12
            assert estimate.argmax_state.is_pure()
            assert not estimate.flagged


def test_local_angle_is_monotone_in_grid_size(module, rng, tol):
    H, K = _rank_one_submodule(module, rng, tol), _random_submodule(module, rng, tol)
    values = [
        local_angle(H, K, "friedrichs", OptimizerBudget(grid=grid, refine_iters=0, mixed_samples=0), tol).value
        for grid in (1, 2, 4, 8, 16)
    ]
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_local_angle_matches_global_angle_for_standard_modules(module, rng, tol):
    for _ in range(10):
        H, K = _random_submodule(module, rng, tol), _random_submodule(module, rng, tol)
        estimate = local_angle(H, K, "friedrichs", FAST, tol)
        assert estimate.value == pytest.approx(module_friedrichs_cosine(H, K, tol), abs=1e-9)
        assert estimate.mixed_state_max <= estimate.value + 1e-9


def test_local_angle_landscape_and_round_trip(module, rng, tol):
    H, K = _rank_one_submodule(module, rng, tol), _rank_one_submodule(module, rng, tol)
    estimate = local_angle(H, K, "dixmier", FAST, tol, record_landscape=True)
    assert len(estimate.landscape) == estimate.grid_size == 8
    assert max(point.value for point in estimate.landscape) <= estimate.value + 1e-12

    restored = AngleEstimate.model_validate_json(estimate.model_dump_json())
    assert restored.value == estimate.value
    assert restored.landscape == []
    assert np.allclose(restored.argmax_state.densities[estimate.argmax_block], estimate.argmax_state.densities[estimate.argmax_block])


def test_check_alpha_complement_on_random_concordant_pairs(module, rng, tol):
    for _ in range(20):
        H, K = _random_submodule(module, rng, tol), _random_submodule(module, rng, tol)
        verdict = check_alpha_complement(H, K, FAST, tol)
        assert verdict.holds
        assert verdict.difference <= 1e-3


def test_check_alpha_complement_on_block_algebra_pairs(rng, tol):
    for block_dims in ([1, 1], [1, 2], [2, 2]):
        module = StandardModule(algebra=FiniteCStarAlgebra(block_dims=block_dims), m=2)
        H, K = _rank_one_submodule(module, rng, tol), _rank_one_submodule(module, rng, tol)
        assert check_alpha_complement(H, K, FAST, tol).holds


def test_check_alpha_complement_requires_concordance(module, rng, tol, monkeypatch):
    H = _random_submodule(module, rng, tol)
    monkeypatch.setattr("sepair.operators.local_angles.tools.is_concordant", lambda *args: False)
    with pytest.raises(PreconditionFailedError):
        check_alpha_complement(H, H, FAST, tol)


def test_zero_angle_theorem_on_commuting_pairs(module, rng, tol):
    for _ in range(50):
        H, K = _aligned_submodule(module, rng, tol), _aligned_submodule(module, rng, tol)
        verdict = check_zero_angle_theorem(H, K, FAST, tol)
        assert verdict.alpha <= 1e-6
        assert verdict.zero_angle and verdict.lattice_identity


def test_zero_angle_theorem_on_angled_pairs(module, rng, tol):
    for _ in range(50):
        H, K = _rank_one_submodule(module, rng, tol), _rank_one_submodule(module, rng, tol)
        verdict = check_zero_angle_theorem(H, K, FAST, tol)
        assert not verdict.zero_angle and not verdict.lattice_identity
        assert verdict.agree


def test_separation_from_alpha0_orthogonal_pair(module, rng, tol):
    H = _random_submodule(module, rng, tol)
    verdict = check_separation_from_alpha0(H, module_orth_complement(H, tol), FAST, tol, samples=10)
    assert verdict.alpha0 == pytest.approx(0.0, abs=1e-12)
    assert verdict.separated and verdict.implication_holds


def test_separation_from_alpha0_angled_pair(module, rng, tol):
    H, K = _rank_one_submodule(module, rng, tol), _rank_one_submodule(module, rng, tol)
    verdict = check_separation_from_alpha0(H, K, FAST, tol, samples=20)
    assert verdict.below_margin and verdict.separated
    assert len(verdict.inequality_checks) == 20
    assert min(check.slack for check in verdict.inequality_checks) >= -1e-9


def test_separation_from_alpha0_overlapping_pair(module, rng, tol):
    shared = random_module_vector(module, rng)
    H = submodule_closure(module, [shared, random_module_vector(module, rng)], tol)
    K = submodule_closure(module, [shared, random_module_vector(module, rng)], tol)
    if submodule_closure(module, [shared], tol).dim == 0:
        pytest.skip("shared generator is zero")
    verdict = check_separation_from_alpha0(H, K, FAST, tol, samples=5)
    assert verdict.alpha0 >= 1 - 1e-3
    assert not verdict.below_margin and not verdict.separated
    assert verdict.implication_holds


def test_commutation_bridge_on_commuting_pair(module, rng, tol):
    H, K = _aligned_submodule(module, rng, tol), _aligned_submodule(module, rng, tol)
    verdict = commutation_bridge(H, K, state_family(M2_PLUS_M3), FAST, tol)
    assert verdict.all_commute
    assert all(check.product_is_meet for check in verdict.checks)
    assert verdict.alpha <= 1e-6


def test_commutation_bridge_on_angled_pair(module, rng, tol):
    H, K = _rank_one_submodule(module, rng, tol), _rank_one_submodule(module, rng, tol)
    verdict = commutation_bridge(H, K, state_family(M2_PLUS_M3), FAST, tol)
    assert not verdict.all_commute
    assert verdict.alpha is None


def test_inequality_chain_under_concordance(module, rng, tol):
    for _ in range(10):
        H, K = _random_submodule(module, rng, tol), _random_submodule(module, rng, tol)
        states = state_family(M2_PLUS_M3, random_pure=5, rng=rng) + [faithful_state(M2_PLUS_M3)]
        verdict = check_inequality_chain(H, K, states, tol)
        assert verdict.holds
        assert len(verdict.checks) == len(states)
