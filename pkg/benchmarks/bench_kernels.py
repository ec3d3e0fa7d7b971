"""Compiled vs pure-Python timing for the index hashing kernels.

Usage: python3 benchmarks/bench_kernels.py [--height 32] [--repeat 5]
"""
import argparse
import os
import timeit

from dvfs import _purekernels

try:
    from dvfs import _speedups
except ImportError:
    _speedups = None


def workloads(height):
    token = os.urandom(32)
    leaf = b"01" * (height // 2) + b"0" * (height % 2)
    tokens = [os.urandom(32) for _ in range(8)]
    bits = leaf[: height // 2]
    entries = {_purekernels.node_key(b"M", bits, t) for t in tokens[::2]}
    alive = list(range(len(tokens)))
    return {
        "node_key": (lambda m: m.node_key(b"M", leaf, token), 20_000),
        "path_keys": (lambda m: m.path_keys(b"M", leaf, token), 2_000),
        "surviving": (lambda m: m.surviving(entries, b"M", bits, tokens, alive), 5_000),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--height", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _speedups is None:
        print("compiled extension not built; showing pure-Python timings only")
    print(f"{'kernel':<10} {'python us':>10} {'compiled us':>12} {'speedup':>8}")
    for name, (call, number) in workloads(args.height).items():
        if _speedups is not None and call(_speedups) != call(_purekernels):
            raise SystemExit(f"{name}: backends disagree")
        py = min(timeit.repeat(lambda: call(_purekernels), number=number, repeat=args.repeat)) / number
        if _speedups is None:
            print(f"{name:<10} {py * 1e6:>10.2f}")
            continue
        cc = min(timeit.repeat(lambda: call(_speedups), number=number, repeat=args.repeat)) / number
        print(f"{name:<10} {py * 1e6:>10.2f} {cc * 1e6:>12.2f} {py / cc:>7.2f}x")


if __name__ == "__main__":
    main()
