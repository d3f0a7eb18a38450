import json

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from igr.readout import ridge_fit, ridge_predict, nmse
from igr.tasks import (DivergenceError, SeriesTaskConfig, gen_input, memoryless_baseline, narma2,
                       node_ablation, reservoir_states, run_series_task, second_order, sweep,
                       write_report, write_sweep_csv)

SMALL = SeriesTaskConfig(train_length=60, test_length=30, channel_lengths_um=(20.0, 1000.0),
                         warmup_steps=10, substeps_per_step=100)


# --- inputs and targets ---------------------------------------------------------

def test_gen_input_determinism_and_range():
    a, b = gen_input(1000, 0.0, 0.5, 7), gen_input(1000, 0.0, 0.5, 7)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.0 and a.max() < 0.5
    assert not np.array_equal(a, gen_input(1000, 0.0, 0.5, 8))
    with pytest.raises(ValueError):
        gen_input(5, 0.5, 0.5)


def test_gen_input_law_of_large_numbers():
    assert gen_input(100_000, 0.0, 0.5, 0).mean() == pytest.approx(0.25, abs=0.005)


def test_narma2_hand_values():
    y = narma2(np.zeros(3))
    np.testing.assert_allclose(y, [0.1, 0.14, 0.1616], rtol=1e-14)
    assert narma2([0.5])[0] == pytest.approx(0.175, rel=1e-14)


def test_second_order_hand_values():
    assert second_order([0.0])[0] == pytest.approx(0.1)
    assert second_order([0.5])[0] == pytest.approx(0.175, rel=1e-14)


def _second_order_one_based(u):
    # literal recurrence y(k) = 0.4 y(k-1) + 0.4 y(k-1) y(k-2) + 0.6 u(k)^3 + 0.1, k = 1..K
    y = {-1: 0.0, 0: 0.0}
    for k in range(1, len(u) + 1):
        y[k] = 0.4 * y[k - 1] + 0.4 * y[k - 1] * y[k - 2] + 0.6 * u[k - 1] ** 3 + 0.1
    return y


@given(arrays(float, st.integers(1, 200), elements=st.floats(0, 0.5)))
def test_recurrences_are_the_same_system(u):
    a, b = narma2(u), second_order(u)
    np.testing.assert_array_equal(a, b)
    lit = _second_order_one_based(u)
    # narma2 entry j is y_t(j+1) of the one-based recurrence: the one-index shift
    np.testing.assert_allclose(a, [lit[k] for k in range(1, len(u) + 1)], rtol=1e-14)
    assert np.all((a >= 0) & (a < 1))


@pytest.mark.parametrize("target", [narma2, second_order])
def test_divergence_is_reported(target):
    with pytest.raises(DivergenceError):
        target(np.full(50, 1.2))


def test_config_validation():
    with pytest.raises(ValueError):
        SeriesTaskConfig(kind="narma10")
    with pytest.raises(ValueError):
        SeriesTaskConfig(train_length=0)
    with pytest.raises(ValueError):
        SeriesTaskConfig(input_low=0.5, input_high=0.5)
    with pytest.raises(ValueError):
        SeriesTaskConfig(washout=450)


# --- pipeline ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_report():
    return run_series_task(SMALL)


def test_state_matrix_shape():
    u = gen_input(SMALL.step_count, seed=0)
    m = reservoir_states(SMALL, u)
    assert m.shape == (90, 20)        # 2 channels x (3 + 2 nodes) x 2 sources
    assert m.labels[:2] == ["ch20_on_v1", "ch20_on_v1_inv"]


def test_oracle_feature_gives_near_zero_nmse():
    u = gen_input(SMALL.step_count, seed=SMALL.rng_seed)
    rep = run_series_task(replace(SMALL, ridge_lambda=1e-12), extra_columns=narma2(u))
    assert rep.nmse_test < 1e-6 and rep.nmse_train < 1e-6


def test_report_metrics_and_baseline(small_report):
    rep = small_report
    assert all(v >= 0 for v in rep.metrics().values())
    assert rep.target.size == rep.predicted.size == 90
    assert set(rep.extra["baseline"]) == set(rep.metrics())


def test_memoryless_baseline_uses_only_the_input():
    u = gen_input(SMALL.step_count, seed=1)
    y = narma2(u)
    a = memoryless_baseline(u, y, SMALL)
    b = memoryless_baseline(u, y, replace(SMALL, channel_lengths_um=(500.0,)))
    assert a.nmse_test == b.nmse_test


def test_nested_models_never_raise_training_nmse():
    u = gen_input(SMALL.step_count, seed=2)
    y = narma2(u)
    X = reservoir_states(SMALL, u).values[:60]
    X = (X - X.min(0)) / (X.max(0) - X.min(0))
    prev = np.inf
    for n in range(1, X.shape[1] + 1):
        cols = X[:, :n]
        e = nmse(y[:60], ridge_predict(ridge_fit(cols, y[:60], 0.0), cols))
        assert e <= prev + 1e-9
        prev = e


def test_report_files_are_deterministic(tmp_path, small_report):
    write_report(small_report, SMALL, 0, tmp_path / "a")
    write_report(run_series_task(SMALL), SMALL, 0, tmp_path / "b")
    for name in ("report.json", "prediction.csv", "readout.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 0 and report["config"]["train_length"] == 60
    lines = (tmp_path / "a" / "prediction.csv").read_text().splitlines()
    assert lines[0] == "k,target,prediction" and len(lines) == 91


# --- sweep and ablation ------------------------------------------------------------

def test_sweep_grid_and_best_flag(tmp_path):
    cfg = replace(SMALL, channel_lengths_um=(100.0,), train_length=40, test_length=20)
    cells = sweep((20e-3, 50e-3), (0.5, 0.75), cfg)
    assert len(cells) == 4
    ok = [c for c in cells if c.error is None]
    best = [c for c in cells if c.best]
    assert len(best) == 1 and best[0].nmse_test == min(c.nmse_test for c in ok)
    write_sweep_csv(cells, tmp_path / "sweep.csv")
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "period_s,duty,nmse_test,best,error" and len(lines) == 5


def test_sweep_records_failing_cells():
    cfg = replace(SMALL, channel_lengths_um=(100.0,), train_length=40, test_length=20)
    # at duty 0.99 the 0.5 ms interval is shorter than one 1.25 ms trace sample
    cells = sweep((50e-3,), (0.99,), cfg)
    assert cells[0].error is not None and not cells[0].best


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep((), (0.5,), SMALL)


def test_node_ablation_structure():
    res = node_ablation(SMALL)
    assert res.nmse_per_node.shape == (10,)
    # all nodes nest every single node: training error can only drop
    assert np.all(res.nmse_train_all_nodes <= res.nmse_train_per_node + 1e-12)
