"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from toruslab import _fallback, kernels

try:
    from toruslab import _kernels as compiled
except ImportError:
    compiled = None


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"{label:<48s} {best * 1e3:10.3f} ms")
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        print("extension not built; only the fallback is timed")
    cases = [
        ("count x^2 + 2y^2 <= 1e7", (1, 0, 2, 10 ** 7)),
        ("count 3x^2 + 2xy + 5y^2 <= 1e9", (3, 2, 5, 10 ** 9)),
    ]
    for label, (A, B, C, X) in cases:
        assert compiled is None or compiled.count_int_form(A, B, C, X) == _fallback.count_int_form(A, B, C, X)
        t_py = bench(f"{label} [numpy]", lambda: _fallback.count_int_form(A, B, C, X), args.repeat)
        if compiled is not None:
            t_c = bench(f"{label} [cython]", lambda: compiled.count_int_form(A, B, C, X), args.repeat)
            print(f"{'':<48s} speed-up x{t_py / t_c:.1f}")

    xs = np.random.default_rng(0).integers(10 ** 3, 10 ** 7, 3200)
    t_py = bench("3200 thresholds up to 1e7 [numpy]", lambda: [_fallback.count_int_form(1, 0, 2, int(x)) for x in xs], args.repeat)
    if compiled is not None:
        t_c = bench("3200 thresholds up to 1e7 [cython]", lambda: compiled.count_int_form_many(1, 0, 2, xs), args.repeat)
        print(f"{'':<48s} speed-up x{t_py / t_c:.1f}")

    t_py = bench("recurrence K = 1e5 [python]", lambda: _fallback.recurrence_iterate(1.0, 2.0, 0.5, 100_000), args.repeat)
    if compiled is not None:
        t_c = bench("recurrence K = 1e5 [cython]", lambda: compiled.recurrence_iterate(1.0, 2.0, 0.5, 100_000), args.repeat)
        print(f"{'':<48s} speed-up x{t_py / t_c:.1f}")
    print(f"active backend: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
