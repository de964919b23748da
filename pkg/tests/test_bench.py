import math

import pytest

from rrrp.bench import (BENCH_COLUMNS, BenchRow, bench_csv, bench_one, gap_percent, make_instance, mean_gap,
                        run_bench, runtime_exponent, shape_for)


@pytest.mark.parametrize("family", ["geometric", "random"])
def test_small_sizes_have_nonnegative_gap(family):
    rows = run_bench([20, 40], trials=3, seed=1, family=family)
    assert len(rows) == 6
    for r in rows:
        assert r.oracle_status == "ok"
        assert r.gap_pct is not None and r.gap_pct >= -1e-9
        assert r.alg_ms > 0 and r.oracle_ms is not None


def test_beyond_oracle_cap_keeps_runtime():
    row = bench_one(500, seed=3, oracle_max_edges=200)
    assert row.edges > 200
    assert row.gap_pct is None and row.opt_cost is None and row.oracle_ms is None
    assert row.oracle_status == "skipped"
    assert row.alg_ms > 0 and math.isfinite(row.alg_cost)


def test_csv_layout():
    rows = run_bench([20], trials=2, seed=0, oracle_max_edges=0)
    lines = bench_csv(rows).strip().splitlines()
    assert lines[0] == ",".join(BENCH_COLUMNS)
    first = dict(zip(BENCH_COLUMNS, lines[1].split(",")))
    assert first["family"] == "geometric" and first["gap_pct"] == "" and first["binding"] in ("0", "1")


@pytest.mark.parametrize("family", ["geometric", "random"])
@pytest.mark.parametrize("size", [20, 80, 160])
def test_sizes_stay_near_target(family, size):
    inst = make_instance(family, size, seed=5)
    assert inst.n_edges <= size + inst.n_groups  # null edges come on top
    assert inst.n_edges >= size // 3


def test_shape_rejects_unknown_family():
    with pytest.raises(ValueError):
        shape_for(100, "lattice")


def test_gap_percent():
    assert gap_percent(11.0, 10.0) == pytest.approx(10.0)
    assert gap_percent(0.0, 0.0) == 0.0
    assert gap_percent(1.0, 0.0) == math.inf


def _row(size, edges, ms, gap=None, binding=True):
    return BenchRow("random", size, 0, 0, edges, 1, binding, 1.0, None, gap, ms, None, "ok")


def test_runtime_exponent_recovers_power_law():
    rows = [_row(n, n, 0.01 * n ** 1.5) for n in (100, 1000, 10000)]
    assert runtime_exponent(rows) == pytest.approx(1.5)
    assert runtime_exponent(rows[:1]) == 0.0


def test_mean_gap_counts_binding_rows():
    rows = [_row(20, 20, 1, 10.0), _row(20, 20, 1, 0.0, binding=False), _row(40, 40, 1, None)]
    assert mean_gap(rows) == 10.0
    assert mean_gap(rows, binding_only=False) == 5.0
    assert mean_gap([_row(20, 20, 1)]) is None
