"""Timing of the fast transform and the Hadamard layer against their direct counterparts."""
from __future__ import annotations

import time

import numpy as np

from . import layers as L
from .oracle import naive_dft
from .spectral import KernelPattern, dft

DEFAULT_SIZES = (16, 49, 784)


def time_call(fn, trials: int) -> float:
    """Best-of-three mean wall time of ``fn()`` in nanoseconds."""
    fn()
    best = np.inf
    for _ in range(3):
        start = time.perf_counter_ns()
        for _ in range(trials):
            fn()
        best = min(best, (time.perf_counter_ns() - start) / trials)
    return float(best)


def bench_dft(n: int, trials: int, rng) -> dict:
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    fast = time_call(lambda: dft(x), trials)
    naive = time_call(lambda: naive_dft(x), trials)
    return {"case": f"dft N={n}", "fast_ns": fast, "slow_ns": naive, "speedup": naive / fast}


def bench_layer(n: int, trials: int, rng, filters: int = 50) -> dict:
    side = max(1, min(7, int(np.sqrt(n))))
    stride = side if n < 49 else int(np.sqrt(n))
    try:
        pattern = KernelPattern.rectangle(side, side, stride, n)
    except ValueError:
        pattern = KernelPattern(tuple(range(min(n, side * side))), n)
    w = rng.standard_normal((filters, 1, pattern.size)) + 0j
    params = L.HadamardParams(pattern, w, np.zeros(filters, np.complex128))
    x = rng.standard_normal((1, n)) + 0j
    z = dft(x)
    fast = time_call(lambda: L.hadamard(z, params), trials)
    slow = time_call(lambda: L.conv_space(x, params), trials)
    return {"case": f"layer N={n} |K|={pattern.size} q={filters}", "fast_ns": fast,
            "slow_ns": slow, "speedup": slow / fast}


def run(sizes=DEFAULT_SIZES, trials: int = 20, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    rows = [bench_dft(n, trials, rng) for n in sizes]
    rows += [bench_layer(n, trials, rng) for n in sizes]
    return rows


def format_row(row: dict) -> str:
    return (f"{row['case']:<32} fast={row['fast_ns']:>14.0f} ns/op "
            f"slow={row['slow_ns']:>14.0f} ns/op speedup={row['speedup']:.1f}x")
