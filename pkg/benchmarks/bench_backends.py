"""Compare the compiled and numpy kernels on the LSH score path.

    python benchmarks/bench_backends.py [--runs 1000] [--seq-lens 10,32,128]

Prints mean seconds per ``lsh_scores`` call for each backend, the speedup,
and checks the two backends produce identical scores.
"""
import argparse
import statistics
import time

import numpy as np

from simhash_attention import _backend
from simhash_attention.attention import AttentionInputs, full_scores, lsh_scores
from simhash_attention.simhash import LshConfig, build_hash_family


def mean_time(fn, runs, warmup=10):
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.fmean(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=1000)
    parser.add_argument("--seq-lens", default="10,32,128")
    parser.add_argument("--heads", type=int, default=2)
    parser.add_argument("--head-dim", type=int, default=64)
    args = parser.parse_args()

    names = _backend.available()
    backends = {name: _backend.load(name) for name in names}
    fam = build_hash_family(LshConfig(2, 64, 1, args.head_dim, seed=0))
    print(f"backends: {', '.join(names)}   r=2 m=64 n=1 d={args.head_dim} heads={args.heads} runs={args.runs}")
    header = f"{'seq_len':>8} {'full (s)':>11}" + "".join(f" {n + ' (s)':>12}" for n in names)
    if len(names) == 2:
        header += f" {'speedup':>8}"
    print(header)
    for L in (int(x) for x in args.seq_lens.split(",")):
        inputs = AttentionInputs.random(1, args.heads, L, args.head_dim, np.random.default_rng(L))
        results = [lsh_scores(inputs, fam, backend=k).scores for k in backends.values()]
        assert all(np.array_equal(results[0], r) for r in results[1:]), "backends disagree"
        runs = max(1, args.runs * 10 // L)
        t_full = mean_time(lambda: full_scores(inputs), runs)
        times = {n: mean_time(lambda k=k: lsh_scores(inputs, fam, backend=k), runs) for n, k in backends.items()}
        line = f"{L:>8} {t_full:>11.2e}" + "".join(f" {times[n]:>12.2e}" for n in names)
        if len(names) == 2:
            line += f" {times['python'] / times['cython']:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
