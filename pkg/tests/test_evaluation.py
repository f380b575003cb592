import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ghsbp.errors import DomainError
from ghsbp.evaluation import (
    REPORT_COLUMNS,
    TABLE1_GRID,
    TABLE2_GRID,
    EvalReport,
    compare_methods,
    default_workers,
    format_float,
    mae,
    method_label,
    read_reports,
    write_reports,
)
from ghsbp.gibbs import Hyperparams
from ghsbp.markov_sim import GeometricChainSpec, Variant, simulate_chain, true_tpm

TEMPLATE = Hyperparams(1.0, 1.0, 1.0, num_samples=6, burn_in=2)
SPEC = GeometricChainSpec("LogP", 400, seed=17)

matrices = hnp.arrays(float, (4, 4), elements=st.floats(0, 1))


def test_mae_identity():
    T = true_tpm("LogP", 5)
    assert mae(T, T) == 0.0


def test_mae_hand_example():
    T = true_tpm("LogP", 2)
    p1 = 1 / (math.log(2) + 10)
    expected = (0.4 + 0.41 + abs(0.5 - p1) + abs(0.5 - p1 * (1 - p1))) / 4
    assert mae(np.full((2, 2), 0.5), T) == pytest.approx(expected, abs=1e-15)


@given(matrices, matrices)
def test_mae_symmetric_and_bounded(a, b):
    assert mae(a, b) == mae(b, a)
    assert 0 <= mae(a, b) <= 1


@given(matrices, matrices, st.permutations(range(4)))
def test_mae_row_permutation_invariant(a, b, perm):
    assert mae(a[list(perm)], b[list(perm)]) == pytest.approx(mae(a, b), rel=1e-15)


def test_mae_dimension_mismatch():
    with pytest.raises(DomainError):
        mae(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(DomainError):
        mae(np.zeros(4), np.zeros(4))


def test_labels():
    assert method_label(1) == "HSBP" and method_label(1.0) == "HSBP"
    assert method_label(3) == "GHSBP"


def test_grids():
    assert len(TABLE1_GRID) == 18 and sum(a == 1 for a, _, _ in TABLE1_GRID) == 6
    assert len(TABLE2_GRID) == 17 and sum(a == 1 for a, _, _ in TABLE2_GRID) == 5
    assert (1, 2, 10) in TABLE1_GRID and (3, 1, 10) in TABLE1_GRID
    assert (50, 1, 10) in TABLE2_GRID and (1, 1, 10) in TABLE2_GRID
    for grid in (TABLE1_GRID, TABLE2_GRID):
        assert len(set(grid)) == len(grid)


def test_report_validation():
    with pytest.raises(DomainError):
        EvalReport("Bayes", 1, 1, 1, 0.1, 2, 10, 0)
    with pytest.raises(DomainError):
        EvalReport("MLE", None, None, None, -0.1, 2, 10, 0)
    assert EvalReport("MLE", None, None, None, 0.1, 2, 10, 0).hyperparams_used is None
    assert EvalReport("GHSBP", 3.0, 1.0, 10.0, 0.1, 2, 10, 0).hyperparams_used == (3.0, 1.0, 10.0)


def test_compare_methods_structure():
    grid = [(1, 2, 10), (3, 1, 10)]
    reports = compare_methods(SPEC, grid, base_seed=5, template=TEMPLATE)
    assert len(reports) == 1 + len(grid)
    assert [r.method for r in reports] == ["MLE", "HSBP", "GHSBP"]
    assert reports[1].hyperparams_used == (1.0, 2.0, 10.0)
    chain = simulate_chain(SPEC)
    for r in reports:
        assert r.seed == 17
        assert r.chain_length == 400
        assert r.d == chain.max_state + 1
        assert 0 <= r.mae_times_100 <= 100


def test_observed_chain_matches_spec_run():
    chain = simulate_chain(SPEC)
    a = compare_methods(SPEC, [(2, 2, 10)], base_seed=5, template=TEMPLATE)
    b = compare_methods(chain, [(2, 2, 10)], base_seed=5, template=TEMPLATE, variant=Variant.LOGP, chain_seed=17)
    assert a == b


def test_truncation_extra_grows_dimension():
    a = compare_methods(SPEC, [(2, 2, 10)], base_seed=5, template=TEMPLATE)
    b = compare_methods(SPEC, [(2, 2, 10)], base_seed=5, template=TEMPLATE, truncation_extra=3)
    assert b[0].d == a[0].d + 3


def test_compare_needs_grid_and_variant():
    with pytest.raises(DomainError):
        compare_methods(SPEC, [], base_seed=0)
    with pytest.raises(DomainError):
        compare_methods(simulate_chain(SPEC), [(1, 1, 1)], base_seed=0)
    with pytest.raises(DomainError):
        compare_methods(simulate_chain(SPEC), [(1, 1, 1)], base_seed=0, variant="LogP", rerun_per_row=True)


def test_worker_count_does_not_change_results():
    grid = [(1, 1, 10), (2, 1, 10), (5, 0.5, 10)]
    serial = compare_methods(SPEC, grid, base_seed=8, template=TEMPLATE, workers=1)
    pooled = compare_methods(SPEC, grid, base_seed=8, template=TEMPLATE, workers=3)
    assert serial == pooled


def test_row_seeds_differ():
    grid = [(2, 2, 10), (2, 2, 10)]
    r = compare_methods(SPEC, grid, base_seed=8, template=TEMPLATE)
    # identical hyperparameters, independent sampler streams
    assert r[1].mae_times_100 != r[2].mae_times_100


def test_rerun_per_row_uses_fresh_chains():
    grid = [(1, 1, 10), (2, 1, 10)]
    r = compare_methods(SPEC, grid, base_seed=8, template=TEMPLATE, rerun_per_row=True)
    seeds = [x.seed for x in r]
    assert len(set(seeds)) == 3
    again = compare_methods(SPEC, grid, base_seed=8, template=TEMPLATE, rerun_per_row=True)
    assert r == again


def test_default_workers(monkeypatch):
    monkeypatch.setenv("REPRO_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("REPRO_THREADS", "zero")
    with pytest.raises(DomainError):
        default_workers()
    monkeypatch.setenv("REPRO_THREADS", "0")
    with pytest.raises(DomainError):
        default_workers()
    monkeypatch.delenv("REPRO_THREADS")
    assert default_workers() >= 1


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_round_trips(x):
    assert float(format_float(x)) == x


def test_reports_round_trip(tmp_path):
    reports = compare_methods(SPEC, [(1, 2, 10), (3, 1, 10)], base_seed=5, template=TEMPLATE)
    path = tmp_path / "r.csv"
    write_reports(path, reports, header_lines=["mode = reproduce-table1"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# mode = reproduce-table1"
    assert lines[1] == ",".join(REPORT_COLUMNS)
    assert lines[2].startswith("MLE,,,,")
    assert read_reports(path) == reports
