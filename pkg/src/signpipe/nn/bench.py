"""Wall-clock latency benchmarking for the forward pass."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .network import forward

__all__ = ["LatencyStats", "benchmark_inference"]


@dataclass(frozen=True)
class LatencyStats:
    p50_ms: float
    p99_ms: float
    mean_ms: float
    n_runs: int


def benchmark_inference(w: dict[str, np.ndarray], cfg: ModelConfig,
                        n_runs: int = 50, seed: int = 0) -> LatencyStats:
    """Time forward() n_runs times on one fixed random input, after 3
    warmup runs. Percentiles use linear interpolation."""
    if n_runs <= 0:
        raise ValueError(f"n_runs must be positive, got {n_runs}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((cfg.max_seq_len, cfg.input_dim)).astype(np.float32)
    for _ in range(3):
        forward(x, w, cfg)
    times = np.empty(n_runs)
    for i in range(n_runs):
        t0 = time.perf_counter()
        forward(x, w, cfg)
        times[i] = (time.perf_counter() - t0) * 1000.0
    return LatencyStats(
        p50_ms=float(np.percentile(times, 50)),
        p99_ms=float(np.percentile(times, 99)),
        mean_ms=float(times.mean()),
        n_runs=n_runs,
    )
