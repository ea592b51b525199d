import csv
import io
import math

import numpy as np
import pytest

from cpmarg import _kernels
from cpmarg.benchmark import (
    BenchmarkGrid,
    engine_batch,
    engine_call,
    fit_slope,
    random_instance,
    run_benchmark,
    stub_self_test,
    time_call,
)
from cpmarg.errors import ContractViolation, GuardRefusal


def test_fit_slope_exact_power_law():
    xs = [1, 2, 4, 8]
    assert fit_slope(xs, [3 * x**1.5 for x in xs]) == pytest.approx(1.5, abs=1e-12)


def test_fit_slope_needs_two_points():
    with pytest.raises(ContractViolation):
        fit_slope([1], [1.0])


def test_stub_self_test_recovers_unit_slopes():
    sm, sn = stub_self_test()
    assert abs(sm - 1.0) <= 0.1
    assert abs(sn - 1.0) <= 0.1


def test_time_call_batched_counts_evaluations():
    calls = []

    def fn(k):
        calls.append(k)

    time_call(fn, reps=5, min_batch=0.0, batched=True)
    assert all(k >= 1 for k in calls)
    assert len(calls) == 1 + 1 + 5  # warm, probe, timed


@pytest.mark.parametrize("segments", [1, 2, 4])
def test_engine_batch_matches_public_api(segments):
    matrix, log_w = random_instance(12, segments, seed=3)
    for engine in ("dp", "naive", "forward"):
        single = engine_call(engine, matrix, log_w)()
        repeated = engine_batch(engine, matrix, log_w)(3)
        assert repeated == pytest.approx(3 * single, rel=1e-12, abs=1e-9)


def test_repeat_dp_single_segment_sums_row():
    lp = np.arange(5.0)[None, :]
    assert _kernels.repeat_dp(lp, np.zeros(5), 2) == 20.0


def test_guard_refusal_on_large_naive_grid():
    with pytest.raises(GuardRefusal):
        BenchmarkGrid(m_values=(20,), n_fixed=200, n_values=(200, 400))


@pytest.mark.parametrize("kw", [{"engines": ("fast",)}, {"reps": 3}, {"mode": "wall"}, {"m_values": (-1, 1)}])
def test_grid_validation(kw):
    with pytest.raises(ContractViolation):
        BenchmarkGrid(**kw)


def test_grid_from_dict_rejects_unknown_fields():
    with pytest.raises(ContractViolation):
        BenchmarkGrid.from_dict({"engine": ["dp"]})


def test_csv_has_every_point_and_slope_block(monkeypatch):
    grid = BenchmarkGrid(engines=("dp", "forward"), m_values=(1, 2, 4), n_values=(20, 40), n_fixed=20)

    def timer(fn, reps=5, batched=False, **_):
        m, n = current[0]
        return 1e-6 * m * n

    current = [None]
    orig_instance = random_instance

    def instance(n, segments, seed=0):
        current[0] = (segments - 1, n)
        return orig_instance(n, segments, seed)

    monkeypatch.setattr("cpmarg.benchmark.random_instance", instance)
    result = run_benchmark(grid, timer=timer)
    assert result.slopes[("dp", "m")] == pytest.approx(1.0)
    assert result.slopes[("forward", "n")] == pytest.approx(1.0)
    text = result.to_csv()
    head, slopes = text.split("\n\n")
    rows = list(csv.reader(io.StringIO(head)))
    assert rows[0] == ["engine", "m", "segments", "n", "seconds"]
    assert len(rows) - 1 == 2 * len(grid.points())
    assert all(int(r[2]) == int(r[1]) + 1 for r in rows[1:])
    srows = list(csv.reader(io.StringIO(slopes)))
    assert srows[0] == ["engine", "axis", "slope"]
    assert {(r[0], r[1]) for r in srows[1:]} == {("dp", "m"), ("dp", "n"), ("forward", "m"), ("forward", "n")}


def test_forward_oracle_is_quadratic_in_n():
    grid = BenchmarkGrid(engines=("forward",), m_values=(1, 2), n_values=(200, 400, 800))
    slope = run_benchmark(grid).slopes[("forward", "n")]
    assert 1.6 <= slope <= 2.4


def test_dp_linear_in_n_engine_mode():
    grid = BenchmarkGrid(engines=("dp",), m_values=(1, 2), n_values=(200, 400, 600, 800))
    slope = run_benchmark(grid).slopes[("dp", "n")]
    assert 0.8 <= slope <= 1.2
    assert math.isfinite(slope)
