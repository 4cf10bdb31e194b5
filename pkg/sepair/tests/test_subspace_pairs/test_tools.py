import numpy as np
import pytest
import scipy.linalg

from sepair.common.exceptions import (
    InternalInconsistencyError,
    NotAProjectionError,
    NotSeparatedError,
    PreconditionFailedError,
)
from sepair.operators.hilbert_core.tools import (
    full_space,
    orth_complement,
    projection,
    span,
    subspace_sum,
    subspaces_equal,
    zero_space,
)
from sepair.operators.subspace_pairs.models import PairReport
from sepair.operators.subspace_pairs.tools import (
    check_sum_equivalences,
    dixmier_cosine,
    friedrichs_cosine,
    is_separated,
    principal_cosines,
    sampled_separation_ratio,
    separation_constants,
    stacked_intersection_dim,
)
from sepair.tests.conftest import complex_gaussian, random_subspace

SQRT_HALF = 1 / np.sqrt(2)


def _random_pair(rng, max_dim=8):
    d = int(rng.integers(2, max_dim + 1))
    return (
        random_subspace(rng, d, int(rng.integers(0, d + 1))),
        random_subspace(rng, d, int(rng.integers(0, d + 1))),
    )


def test_dixmier_cosine_examples(e):
    assert dixmier_cosine(span(e(2, 1)), span(e(2, 2))) == pytest.approx(0.0)
    assert dixmier_cosine(span(e(2, 1)), span(e(2, 1))) == pytest.approx(1.0)
    assert dixmier_cosine(span(e(2, 1)), span(e(2, 1) + e(2, 2))) == pytest.approx(SQRT_HALF)
    assert dixmier_cosine(zero_space(2), full_space(2)) == 0.0


def test_friedrichs_cosine_examples(e, tol):
    assert friedrichs_cosine(span(e(2, 1)), span(e(2, 1)), tol) == pytest.approx(0.0, abs=1e-12)
    assert friedrichs_cosine(span(e(2, 1)), span(e(2, 2)), tol) == pytest.approx(0.0)
    H = span(e(4, 1), e(4, 3))
    K = span(e(4, 1), e(4, 3) + e(4, 4))
    assert dixmier_cosine(H, K) == pytest.approx(1.0)
    assert friedrichs_cosine(H, K, tol) == pytest.approx(SQRT_HALF)


def test_is_separated_examples(e, tol):
    orthogonal = is_separated(span(e(2, 1)), span(e(2, 2)), tol)
    assert orthogonal.separated and orthogonal.c0 == pytest.approx(0.0)
    assert orthogonal.alpha1 == pytest.approx(1.0) and orthogonal.alpha2 == pytest.approx(1.0)

    equal = is_separated(span(e(2, 1)), span(e(2, 1)), tol)
    assert not equal.separated
    assert equal.dim_intersection == 1
    assert equal.alpha1 is None and equal.alpha2 is None

    angled = is_separated(span(e(2, 1)), span(e(2, 1) + e(2, 2)), tol)
    assert angled.separated
    assert angled.c0 == pytest.approx(SQRT_HALF)
    assert angled.alpha1 == pytest.approx(SQRT_HALF)
    assert angled.alpha2 == pytest.approx(SQRT_HALF)


def test_zero_dimensional_pairs_are_separated(e, tol):
    report = is_separated(zero_space(3), span(e(3, 1)), tol)
    assert report.separated
    assert (report.c0, report.c, report.alpha1, report.alpha2) == (0.0, 0.0, 1.0, 1.0)


def test_pair_report_rejects_inconsistent_fields():
    with pytest.raises(ValueError):
        PairReport(c0=0.2, c=0.5, dim_intersection=0, separated=True, alpha1=1.0, alpha2=1.0)
    with pytest.raises(ValueError):
        PairReport(c0=0.2, c=0.1, dim_intersection=0, separated=True)


def test_separation_constants_examples(e, tol):
    assert separation_constants(span(e(3, 1)), span(e(3, 2)), tol) == pytest.approx((1.0, 1.0))
    with pytest.raises(NotSeparatedError):
        separation_constants(span(e(2, 1)), span(e(2, 1)), tol)


def test_separation_constants_match_dixmier_cosine(rng, tol):
    for _ in range(30):
        d = int(rng.integers(3, 9))
        h = int(rng.integers(1, d // 2 + 1))
        H, K = random_subspace(rng, d, h), random_subspace(rng, d, int(rng.integers(1, d - h + 1)))
        alpha1, alpha2 = separation_constants(H, K, tol)
        expected = np.sqrt(1 - dixmier_cosine(H, K) ** 2)
        assert alpha1 == pytest.approx(expected, rel=1e-8)
        assert alpha2 == pytest.approx(expected, rel=1e-8)


def test_symmetry_and_ordering_on_random_pairs(rng, tol):
    for _ in range(100):
        H, K = _random_pair(rng)
        c0, c = dixmier_cosine(H, K), friedrichs_cosine(H, K, tol)
        assert c0 == pytest.approx(dixmier_cosine(K, H), abs=1e-12)
        assert c == pytest.approx(friedrichs_cosine(K, H, tol), abs=1e-9)
        assert 0.0 <= c <= c0 + 1e-12 <= 1.0 + 1e-12


def test_unit_dixmier_cosine_exactly_when_subspaces_meet(rng, tol):
    for _ in range(100):
        H, K = _random_pair(rng)
        report = is_separated(H, K, tol)
        meets = H.dim + K.dim > H.ambient_dim
        assert report.separated == (not meets)
        assert (report.c0 >= 1 - 1e-9) == meets
        assert report.dim_intersection == max(0, H.dim + K.dim - H.ambient_dim)
        assert stacked_intersection_dim(H, K, tol) == report.dim_intersection


@pytest.mark.parametrize(
    "theta, separated, dim_intersection",
    [(1e-2, True, 0), (1e-4, True, 0), (1e-6, False, 1), (0.0, False, 1)],
)
def test_nearly_parallel_lines(e, tol, theta, separated, dim_intersection):
    """1 - c0 is about theta^2 / 2 against the 1e-10 cutoff."""
    H = span(e(3, 1))
    K = span(np.cos(theta) * e(3, 1) + np.sin(theta) * e(3, 2))
    report = is_separated(H, K, tol)
    assert report.separated == separated
    assert report.dim_intersection == dim_intersection
    assert stacked_intersection_dim(H, K, tol) == dim_intersection


def test_disagreeing_separation_criteria_raise(e, tol, monkeypatch):
    monkeypatch.setattr("sepair.operators.subspace_pairs.tools.dixmier_cosine", lambda H, K: 0.0)
    with pytest.raises(InternalInconsistencyError):
        is_separated(span(e(2, 1)), span(e(2, 1)), tol)


def test_complement_law(rng, tol):
    for _ in range(50):
        H, K = _random_pair(rng)
        complements = subspace_sum(orth_complement(H), orth_complement(K), tol)
        assert is_separated(H, K, tol).separated == subspaces_equal(
            complements, full_space(H.ambient_dim), tol
        )


def test_sampled_separation_inequality(rng, tol):
    H, K = random_subspace(rng, 6, 2), random_subspace(rng, 6, 3)
    alpha1, alpha2 = separation_constants(H, K, tol)
    x = H.frame @ complex_gaussian(rng, 2, 1000)
    y = K.frame @ complex_gaussian(rng, 3, 1000)
    x /= np.linalg.norm(x, axis=0)
    y /= np.linalg.norm(y, axis=0)
    total = np.linalg.norm(x + y, axis=0)
    assert np.all(total >= alpha1 * np.linalg.norm(x, axis=0) - tol.eq_abs)
    assert np.all(total >= alpha2 * np.linalg.norm(y, axis=0) - tol.eq_abs)


def test_sampled_ratio_approaches_separation_constant(rng, tol):
    checked = 0
    for _ in range(50):
        d = int(rng.integers(3, 7))
        H = random_subspace(rng, d, int(rng.integers(1, 3)))
        K = random_subspace(rng, d, int(rng.integers(1, min(3, d - H.dim) + 1)))
        alpha1, alpha2 = separation_constants(H, K, tol)
        ratios = sampled_separation_ratio(H, K, 10_000, rng)
        assert ratios.min_ratio_x >= alpha1 - 1e-6
        assert ratios.min_ratio_y >= alpha2 - 1e-6
        if dixmier_cosine(H, K) <= 0.9:
            checked += 1
            assert ratios.min_ratio_x <= 1.05 * alpha1
    assert checked > 0


def test_angles_agree_with_independent_oracles(rng, tol):
    for _ in range(50):
        d = int(rng.integers(2, 9))
        H = random_subspace(rng, d, int(rng.integers(1, 3)))
        K = random_subspace(rng, d, int(rng.integers(1, d + 1)))
        cosines = np.cos(scipy.linalg.subspace_angles(H.frame, K.frame))
        assert dixmier_cosine(H, K) == pytest.approx(np.max(cosines), abs=1e-9)
        residual = cosines[cosines < 1 - 1e-9]
        assert friedrichs_cosine(H, K, tol) == pytest.approx(
            np.max(residual) if residual.size else 0.0, abs=1e-9
        )

        x = H.frame @ complex_gaussian(rng, H.dim, 100_000)
        x /= np.linalg.norm(x, axis=0)
        sampled = np.max(np.linalg.norm(projection(K) @ x, axis=0))
        assert sampled <= dixmier_cosine(H, K) + 1e-12
        assert dixmier_cosine(H, K) - sampled <= 1e-3


def test_principal_cosines_are_sorted(rng):
    H, K = random_subspace(rng, 7, 3), random_subspace(rng, 7, 3)
    cosines = principal_cosines(H, K)
    assert cosines.shape == (3,)
    assert np.all(np.diff(cosines) <= 0)


def test_check_sum_equivalences_examples(e, tol):
    P = np.diag([1.0, 0.0])
    same = check_sum_equivalences(P, P, tol)
    assert same.holds and same.common_dim == 1

    split = check_sum_equivalences(P, np.diag([0.0, 1.0]), tol)
    assert split.holds and split.common_dim == 2


def test_check_sum_equivalences_on_random_rank_one_pair(rng, tol):
    P = projection(random_subspace(rng, 3, 1))
    Q = projection(random_subspace(rng, 3, 1))
    report = check_sum_equivalences(P, Q, tol, combinations=((2, -1),))
    assert report.holds
    assert report.combinations[0].lambda1 == (2.0, 0.0)


def test_check_sum_equivalences_preconditions(tol):
    with pytest.raises(NotAProjectionError):
        check_sum_equivalences(np.array([[1.0, 1.0], [0.0, 0.0]]), np.eye(2), tol)
    with pytest.raises(PreconditionFailedError):
        check_sum_equivalences(np.eye(2), np.eye(2), tol, combinations=((1, -1),))
