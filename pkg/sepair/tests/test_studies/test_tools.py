import numpy as np
import pytest

from sepair.common.exceptions import PreconditionFailedError
from sepair.operators.studies.models import SweepEntry, SweepReport
from sepair.operators.studies.tools import (
    ct_idempotent_example,
    cx_concordance_example,
    run_sweep,
    shift_example,
)

SWEEP = [10, 20, 40, 80]


@pytest.fixture(scope="module")
def shift_sweep():
    return run_sweep("shift", SWEEP)


@pytest.fixture(scope="module")
def ct_sweep():
    return run_sweep("ct", SWEEP)


def test_shift_example_smallest_case(tol):
    entry = shift_example(2, tol)
    assert all(entry.verdicts.values()), entry.verdicts
    assert entry.c0 == pytest.approx(1 / np.sqrt(2))
    assert entry.metrics["dim_sum_range"] == 4


def test_shift_example_rejects_small_n(tol):
    with pytest.raises(PreconditionFailedError):
        shift_example(1, tol)


def test_shift_sweep_stays_separated(shift_sweep):
    for n, verdicts, c0 in zip(shift_sweep.n_values, shift_sweep.verdicts, shift_sweep.c0_values):
        assert verdicts["separated"] and verdicts["ranges_disjoint"], n
        assert verdicts["sum_range_dim_2n"] and verdicts["sum_of_ranges_closed_form"], n
        assert verdicts["product_nonzero"] and verdicts["witness_bounds_sigma"], n
        assert c0 == pytest.approx(1 / np.sqrt(2))


def test_shift_sweep_conditioning_decays(shift_sweep):
    sigma = shift_sweep.sigma_min_values
    assert all(later < earlier for earlier, later in zip(sigma, sigma[1:]))
    assert sigma[-1] < sigma[0] / 2
    ratios = [metrics["witness_ratio"] for metrics in shift_sweep.metrics]
    assert all(later < earlier for earlier, later in zip(ratios, ratios[1:]))


def test_ct_example_by_hand_at_two_nodes(tol):
    entry = ct_idempotent_example(2, tol)
    assert all(entry.verdicts.values()), entry.verdicts
    assert entry.sigma_min == pytest.approx(2.0)
    assert entry.c0 == pytest.approx(0.0, abs=1e-12)
    assert entry.metrics["c0_full"] == pytest.approx(1.0)
    assert entry.metrics["residual_at_zero_node"] == pytest.approx(2.0)
    assert len(entry.deviations) == 2


def test_ct_sweep_exact_identities(ct_sweep):
    for verdicts in ct_sweep.verdicts:
        assert verdicts["t_idempotent"] and verdicts["s_idempotent"]
        assert verdicts["sum_range_is_first_summand"]
        assert verdicts["intersection_is_zero_node"] and verdicts["disjoint_on_positive_nodes"]


def test_ct_sweep_loses_closed_range(ct_sweep):
    sigma = ct_sweep.sigma_min_values
    assert sigma == pytest.approx([2 / (n - 1) for n in SWEEP])
    assert all(later < earlier for earlier, later in zip(sigma, sigma[1:]))
    assert all(later > earlier for earlier, later in zip(ct_sweep.c0_values, ct_sweep.c0_values[1:]))
    norms = [metrics["preimage_norm"] for metrics in ct_sweep.metrics]
    assert all(later > earlier for earlier, later in zip(norms, norms[1:]))


def test_cx_example_on_32_nodes(tol):
    """c(H, K) = 1 holds only in the continuum; on the grid c0 = 1 stands in and c is logged as a deviation."""
    entry = cx_concordance_example(32, tol)
    assert entry.metrics["alpha"] <= 1e-6
    assert entry.c0 >= 1 - 1e-9
    assert entry.verdicts["concordant_a"] and entry.verdicts["alpha_complement"]
    assert entry.verdicts["concordance_states_agree"]
    assert entry.verdicts["concordant_b"] and entry.verdicts["intersection_localization_b"]
    assert entry.metrics["complement_b_dim"] == 1
    assert any(note.startswith("(a)") for note in entry.deviations)


def test_cx_example_rejects_coarse_grid(tol):
    with pytest.raises(PreconditionFailedError):
        cx_concordance_example(3, tol)


def test_run_sweep_orders_and_round_trips(tol):
    report = run_sweep("ct", [8, 3, 5, 3], tol)
    assert report.n_values == [3, 5, 8]
    assert all(note.startswith("n=") for note in report.deviations)
    restored = SweepReport.model_validate_json(report.model_dump_json())
    assert restored == report
    rows = report.rows()
    assert [row["n"] for row in rows] == [3, 5, 8]
    assert {"c0", "sigma_min", "t_idempotent", "preimage_norm"} <= set(rows[0])


def test_sweep_report_rejects_ragged_columns():
    with pytest.raises(ValueError):
        SweepReport(
            example="shift",
            n_values=[2, 3],
            c0_values=[0.5],
            sigma_min_values=[1.0, 1.0],
            verdicts=[{}, {}],
            metrics=[{}, {}],
        )
    with pytest.raises(ValueError):
        SweepReport.from_entries("shift", [SweepEntry(n=2, c0=0.5, sigma_min=1.0)] * 2)
