"""Measure single-sample inference latency.

Times the full forward pass of the default 2.5M-parameter model on one
max-length input after warmup, reporting median, 99th percentile, and
mean in milliseconds. The interactive budget for the recognition server
is a 50 ms median.
"""

from signpipe import nn


def main():
    cfg = nn.DEFAULT_CONFIG
    print(f"default config: {nn.count_parameters(cfg):,} parameters, "
          f"T={cfg.max_seq_len}, d={cfg.model_dim}")
    w = nn.init_weights(cfg, seed=0)
    stats = nn.benchmark_inference(w, cfg, n_runs=50)
    print(f"p50  {stats.p50_ms:7.3f} ms")
    print(f"p99  {stats.p99_ms:7.3f} ms")
    print(f"mean {stats.mean_ms:7.3f} ms")
    print(f"over {stats.n_runs} runs")
    budget = "inside" if stats.p50_ms < 50.0 else "OUTSIDE"
    print(f"{budget} the 50 ms interactive budget")


if __name__ == "__main__":
    main()
