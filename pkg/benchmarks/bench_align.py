"""Compare the two alignment kernel backends on the same inputs.

Times the full DP (cost table + backtrace) for the compiled backend and the
plain-Python one, after a warmup call so JIT compilation does not pollute
the numbers. Both backends must produce identical costs on every input; the
benchmark aborts if they ever differ.

Usage:
    python3 benchmarks/bench_align.py [--sizes 10 50 200] [--repeats 5]
"""
import argparse
import random
import time

from lata.align import align_lengths, get_backend


def make_pair(rng: random.Random, size: int) -> tuple[list[int], list[int]]:
    src = [rng.randint(20, 180) for _ in range(size)]
    # Target lengths loosely track source lengths, like real bitext does.
    tgt = [max(1, int(x * rng.uniform(0.7, 1.3))) for x in src]
    return src, tgt


def best_of(backend, src, tgt, repeats: int) -> tuple[float, float]:
    best = float("inf")
    cost = 0.0
    for _ in range(repeats):
        started = time.perf_counter()
        _, cost = align_lengths(src, tgt, backend=backend)
        best = min(best, time.perf_counter() - started)
    return best, cost


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--sizes", type=int, nargs="+", default=[10, 50, 200],
        help="segment counts per side (default: 10 50 200)",
    )
    parser.add_argument(
        "--repeats", type=int, default=5, help="timed runs per size, best kept"
    )
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)

    pure = get_backend("pure")
    try:
        numba = get_backend("numba")
    except ImportError as exc:
        print(f"numba backend unavailable ({exc}); nothing to compare")
        return 1

    rng = random.Random(args.seed)
    warm_src, warm_tgt = make_pair(rng, 4)
    align_lengths(warm_src, warm_tgt, backend=numba)  # trigger compilation

    print(f"{'size':>6} {'pure (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for size in args.sizes:
        src, tgt = make_pair(rng, size)
        t_pure, c_pure = best_of(pure, src, tgt, args.repeats)
        t_numba, c_numba = best_of(numba, src, tgt, args.repeats)
        if c_pure != c_numba:
            print(f"size {size}: backend costs differ ({c_pure} vs {c_numba})")
            return 1
        speedup = t_pure / t_numba if t_numba > 0 else float("inf")
        print(
            f"{size:>6} {t_pure * 1e3:>12.3f} {t_numba * 1e3:>12.3f} "
            f"{speedup:>8.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
