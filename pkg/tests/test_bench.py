import json
import math
import time

import numpy as np
import pytest

from peakfit.bench import CSV_HEADER, BenchReport, BenchRow, run_benchmark, scaling_probe
from peakfit.em import EMConfig
from peakfit.simulate import SETUPS


@pytest.fixture(scope="module")
def small_report():
    return run_benchmark([200, 400], repeats=3)


def test_rows_and_invariants(small_report):
    assert [r.n for r in small_report.rows] == [200, 400]
    for r in small_report.rows:
        assert r.error is None
        assert r.fft_seconds > 0 and r.vanilla_seconds > 0
        assert r.speedup == r.vanilla_seconds / r.fft_seconds
        assert abs(r.fft_mu - r.vanilla_mu) < 0.05


def test_csv_and_json(small_report):
    lines = small_report.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "n,fft_seconds,vanilla_seconds,speedup,fft_iters,vanilla_iters"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert int(first[0]) == 200 and float(first[3]) == small_report.rows[0].speedup
    doc = json.loads(small_report.to_json())
    assert doc["environment"] == small_report.environment
    assert [r["n"] for r in doc["rows"]] == [200, 400]


def test_repeats_validated():
    with pytest.raises(ValueError):
        run_benchmark([100], repeats=2)


def test_failure_recorded_per_row():
    rep = run_benchmark([100], config=EMConfig(h=-1.0), repeats=3)
    (row,) = rep.rows
    assert row.error and math.isnan(row.speedup)


def test_parallel_matches_serial_estimates():
    a = run_benchmark([150, 250], repeats=3)
    b = run_benchmark([150, 250], repeats=3, parallel=True)
    for ra, rb in zip(a.rows, b.rows):
        assert ra.fft_mu == rb.fft_mu and ra.fft_iters == rb.fft_iters


@pytest.mark.slow
def test_vanilla_superlinear():
    rep = run_benchmark([500, 1000, 2000], repeats=3)
    # per-iteration cost, so differing iteration counts do not blur the growth law
    per_it = [r.vanilla_seconds / r.vanilla_iters for r in rep.rows]
    assert per_it[1] / per_it[0] >= 3
    assert per_it[2] / per_it[1] >= 3


def test_scaling_ratios():
    rows = {(p, v): t for p, v, t in scaling_probe()}
    assert rows[("M", 2048)] / rows[("M", 1024)] <= 2.5
    assert rows[("n", 10000)] / rows[("n", 5000)] <= 2.5


def test_scaling_monotone_smoke():
    rows = {v: t for _, v, t in scaling_probe(m_values=(64, 65536), n_values=())}
    assert rows[64] < rows[65536]
