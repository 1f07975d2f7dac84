"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs each kernel on the same random inputs under both backends and prints
a table of per-call timings plus the speedup ratio. Useful sizes are the
defaults; pass --size / --repeat to stress larger inputs.

Usage:
    python benchmarks/bench_kernels.py [--size N] [--repeat K] [--seed S]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np


def _load_backends():
    from yumalab._kernels import _pure

    backends = [("pure", _pure)]
    try:
        fast = importlib.import_module("yumalab._kernels._fast")
    except ImportError:
        fast = None
    if fast is not None:
        backends.append(("fast", fast))
    return backends


def _time_call(fn, args, repeat: int) -> float:
    # One warmup call, then the best of `repeat` timed runs.
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=20_000, help="vector length (default 20000)")
    parser.add_argument("--repeat", type=int, default=20, help="timed repetitions (default 20)")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.size
    x = rng.pareto(1.5, size=n) + 1.0
    y = x * 0.5 + rng.normal(0.0, 1.0, size=n)
    shares = x / x.sum()

    n_val = max(8, n // 200)
    n_min = max(16, n // 100)
    stakes = rng.pareto(1.5, size=n_val) + 1.0
    weights = rng.random((n_val, n_min))

    cases = [
        ("gini", lambda mod: (mod.gini, (x,))),
        ("hhi", lambda mod: (mod.hhi, (shares,))),
        ("topk_sum", lambda mod: (mod.topk_sum, (x, max(1, n // 100)))),
        ("pearson", lambda mod: (mod.pearson, (x, y))),
        ("coalition_count", lambda mod: (mod.coalition_count, (x, 0.51))),
        ("clip_benchmarks", lambda mod: (mod.clip_benchmarks, (weights, stakes, 0.5))),
    ]

    backends = _load_backends()
    if len(backends) == 1:
        print("compiled backend unavailable; timing the pure backend only")

    results: dict[str, dict[str, float]] = {}
    values: dict[str, dict[str, object]] = {}
    for name, module in backends:
        for case, build in cases:
            fn, call_args = build(module)
            results.setdefault(case, {})[name] = _time_call(fn, call_args, args.repeat)
            values.setdefault(case, {})[name] = fn(*call_args)

    header = f"{'kernel':<18} {'pure (us)':>12}"
    if len(backends) > 1:
        header += f" {'fast (us)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for case, _ in cases:
        row = results[case]
        line = f"{case:<18} {row['pure'] * 1e6:>12.1f}"
        if "fast" in row:
            ratio = row["pure"] / row["fast"] if row["fast"] > 0 else float("inf")
            line += f" {row['fast'] * 1e6:>12.1f} {ratio:>8.2f}x"
        print(line)

    if len(backends) > 1:
        # Sanity: both backends agree on scalar results.
        for case, outs in values.items():
            pure_out, fast_out = outs["pure"], outs["fast"]
            if isinstance(pure_out, np.ndarray):
                ok = np.allclose(pure_out, fast_out, rtol=1e-12, atol=1e-12)
            else:
                ok = np.isclose(float(pure_out), float(fast_out), rtol=1e-12, atol=1e-12)
            if not ok:
                raise SystemExit(f"backend mismatch in {case}: {pure_out!r} vs {fast_out!r}")
        print("\nbackends agree within 1e-12 on all kernels")


if __name__ == "__main__":
    main()
