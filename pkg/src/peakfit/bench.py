"""Runtime comparison of the FFT plug-in EM against the exact O(n^2) EM."""
from __future__ import annotations

import csv
import io
import json
import os
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .em import EMConfig, bernoulli_init, fit_two_component, fit_vanilla_em
from .fft_kde import weighted_kde_fft
from .grid import build_grid
from .kernels import silverman_bandwidth
from .simulate import SETUPS, MixtureSpec, sample_mixture

DEFAULT_SIZES = (500, 1000, 2000, 3000, 5000)
CSV_HEADER = ("n", "fft_seconds", "vanilla_seconds", "speedup", "fft_iters", "vanilla_iters")


@dataclass
class BenchRow:
    n: int
    fft_seconds: float
    vanilla_seconds: float
    speedup: float
    fft_iters: int
    vanilla_iters: int
    fft_mu: float = float("nan")
    vanilla_mu: float = float("nan")
    error: str | None = None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    environment: str = field(default_factory=lambda: describe_environment())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.n, repr(r.fft_seconds), repr(r.vanilla_seconds), repr(r.speedup),
                        r.fft_iters, r.vanilla_iters])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"environment": self.environment,
                           "rows": [asdict(r) for r in self.rows]}, indent=2, allow_nan=True)


def describe_environment() -> str:
    return (f"{platform.platform()}; python {platform.python_version()}; "
            f"numpy {np.__version__}; cpu {platform.processor() or platform.machine()}; "
            f"cores {os.cpu_count()}")


def _time_pair(y, config: EMConfig, r0):
    t0 = time.perf_counter()
    fft = fit_two_component(y, config, init=r0)
    t1 = time.perf_counter()
    van = fit_vanilla_em(y, config, init=r0)
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1, fft, van


def _bench_one(n: int, spec: MixtureSpec, config: EMConfig, repeats: int, seed: int) -> BenchRow:
    y = sample_mixture(spec, n, seed)
    # identical bandwidth and starting split for both engines
    cfg = config if config.h is not None else replace(config, h=silverman_bandwidth(y).h)
    r0 = bernoulli_init(n, cfg.seed)
    ft, vt = [], []
    fft = van = None
    for _ in range(repeats):
        a, b, fft, van = _time_pair(y, cfg, r0)
        ft.append(a)
        vt.append(b)
    f_med, v_med = statistics.median(ft), statistics.median(vt)
    return BenchRow(n, f_med, v_med, v_med / f_med, fft.iterations, van.iterations, fft.mu, van.mu)


def _safe_bench(args) -> BenchRow:
    n = args[0]
    try:
        return _bench_one(*args)
    except Exception as exc:  # recorded per row, never fatal
        nan = float("nan")
        return BenchRow(n, nan, nan, nan, 0, 0, error=f"{type(exc).__name__}: {exc}")


def run_benchmark(sizes=DEFAULT_SIZES, spec: MixtureSpec | None = None,
                  config: EMConfig = EMConfig(), repeats: int = 3, seed: int = 0,
                  parallel: bool = False) -> BenchReport:
    """Median wall times of both engines on identical data and initialization.

    Both engines share ``config.maxit``, so iteration caps are equal.
    ``parallel`` spreads sizes over processes; timings then compete for
    cores and are less stable.
    """
    if repeats < 3:
        raise ValueError("repeats must be at least 3")
    spec = SETUPS["separated_pair"] if spec is None else spec
    jobs = [(int(n), spec, config, repeats, seed) for n in sizes]
    if parallel:
        with ProcessPoolExecutor() as pool:
            rows = list(pool.map(_safe_bench, jobs))
    else:
        rows = [_safe_bench(j) for j in jobs]
    return BenchReport(rows)


def _median_time(fn, min_total: float = 0.05, repeats: int = 5) -> float:
    """Median per-call time; each sample loops until ``min_total`` seconds."""
    loops = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        if time.perf_counter() - t0 >= min_total:
            break
        loops *= 2
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        samples.append((time.perf_counter() - t0) / loops)
    return statistics.median(samples)


def scaling_probe(m_values=(1024, 2048), n_values=(5000, 10000), fixed_n: int = 5000,
                  fixed_m: int = 1024, seed: int = 0):
    """Time :func:`weighted_kde_fft` while varying grid size, then sample size.

    Returns rows ``(param, value, seconds)`` with ``param`` in ``{"M", "n"}``.
    """
    rows = []
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(max((fixed_n, *n_values)))
    for m in m_values:
        s = y[:fixed_n]
        w = np.full(s.size, 1.0 / s.size)
        grid = build_grid(s, int(m), padding_fraction=0.05, h_pad=0.3)
        rows.append(("M", int(m), _median_time(lambda: weighted_kde_fft(s, w, 0.3, grid=grid))))
    for n in n_values:
        s = y[:n]
        w = np.full(s.size, 1.0 / s.size)
        grid = build_grid(y, fixed_m, padding_fraction=0.05, h_pad=0.3)
        rows.append(("n", int(n), _median_time(lambda: weighted_kde_fft(s, w, 0.3, grid=grid))))
    return rows
