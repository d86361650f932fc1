"""Time the compiled kernels against their pure-Python twins.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n-train 60]

Both backends are run on the same inputs; results are checked for equality
before any timing is reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from neuroskill._kernels import available_backends


def _gram(n, d, rng):
    X = rng.standard_normal((n, d))
    X[: n // 2] += 0.8
    y = np.where(np.arange(n) < n // 2, 1.0, -1.0)
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    K = np.exp(-sq / (d * X.var()))
    return 0.5 * (K + K.T), y


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(u, v) for u, v in zip(a, b))
    return bool(np.array_equal(np.asarray(a), np.asarray(b)))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n-train", type=int, default=60, help="SVM training rows (50%% of 115 is about 58)")
    parser.add_argument("--n-samples", type=int, default=54003, help="signal length for the counting kernels")
    args = parser.parse_args(argv)

    backends = available_backends()
    if len(backends) < 2:
        print("compiled backend not built; only", ", ".join(backends), "available")
    rng = np.random.default_rng(0)
    K, y = _gram(args.n_train, 15, rng)
    sig = np.cumsum(rng.standard_normal(args.n_samples))

    cases = {
        "smo_solve": lambda mod: mod.smo_solve(K, y, 1.0, 1e-3, 100_000),
        "extrema_counts": lambda mod: mod.extrema_counts(sig),
        "zero_crossings": lambda mod: mod.zero_crossings(np.diff(sig)),
    }
    reference = {name: fn(backends["python"]) for name, fn in cases.items()}

    print(f"{'kernel':<16}{'backend':<10}{'best of ' + str(args.repeat) + ' (ms)':>18}{'speed-up':>10}")
    for name, fn in cases.items():
        base = None
        for bname in ("python", "cython"):
            if bname not in backends:
                continue
            mod = backends[bname]
            out = fn(mod)
            if not _same(out, reference[name]):
                raise SystemExit(f"{name}: {bname} result differs from the python reference")
            best = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
            base = base or best
            print(f"{name:<16}{bname:<10}{best:>18.3f}{base / best:>9.1f}x")


if __name__ == "__main__":
    main()
