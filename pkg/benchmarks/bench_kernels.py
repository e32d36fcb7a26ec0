#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the pure-Python fallback.

Workload mirrors production use: pairwise name comparisons and record-string
embedding over realistic demographic data.

    python benchmarks/bench_kernels.py [--pairs 200000]
"""

import argparse
import random
import time

from reclink import textsim
from reclink.datagen import CorpusSpec, generate_corpus
from reclink.serialize import serialize_for_blocking


def build_workload(n_pairs: int, seed: int = 7):
    spec = CorpusSpec(n_persons=max(2000, n_pairs // 20), seed=seed)
    a, b, _ = generate_corpus(spec)
    rng = random.Random(seed)
    firsts_a = [r.first_name for r in a.records]
    firsts_b = [r.first_name for r in b.records]
    ssns = [r.ssn for r in a.records if r.ssn]
    texts = [serialize_for_blocking(r) for r in a.records]
    name_pairs = [(rng.choice(firsts_a), rng.choice(firsts_b))
                  for _ in range(n_pairs)]
    ssn_pairs = [(rng.choice(ssns), rng.choice(ssns)) for _ in range(n_pairs)]
    return name_pairs, ssn_pairs, firsts_a, texts


def bench(label, func, unit_count):
    start = time.perf_counter()
    func()
    elapsed = time.perf_counter() - start
    rate = unit_count / elapsed
    return elapsed, rate


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=200_000,
                        help="number of string pairs per kernel benchmark")
    args = parser.parse_args()

    backends = textsim.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; showing pure-Python numbers only")

    name_pairs, ssn_pairs, names, texts = build_workload(args.pairs)

    tasks = {
        "jaro_winkler": lambda impl: [
            impl.jaro_winkler(x, y) for x, y in name_pairs
        ],
        "damerau_levenshtein": lambda impl: [
            impl.damerau_levenshtein(x, y) for x, y in ssn_pairs
        ],
        "soundex": lambda impl: [impl.soundex(x) for x in names * 20],
        "ngram_bucket_counts": lambda impl: [
            impl.ngram_bucket_counts(t, 3, 256) for t in texts
        ],
    }
    counts = {
        "jaro_winkler": len(name_pairs),
        "damerau_levenshtein": len(ssn_pairs),
        "soundex": len(names) * 20,
        "ngram_bucket_counts": len(texts),
    }

    print(f"{'kernel':<22}{'backend':<10}{'time':>9}{'ops/s':>14}{'speedup':>9}")
    print("-" * 64)
    for kernel, task in tasks.items():
        rates = {}
        for backend_name in ("pure", "compiled"):
            impl = backends.get(backend_name)
            if impl is None:
                continue
            elapsed, rate = bench(kernel, lambda: task(impl), counts[kernel])
            rates[backend_name] = rate
            print(f"{kernel:<22}{backend_name:<10}{elapsed:>8.2f}s"
                  f"{rate:>14,.0f}", end="")
            if backend_name == "compiled" and "pure" in rates:
                print(f"{rates['compiled'] / rates['pure']:>8.1f}x")
            else:
                print(f"{'':>9}")
    print(f"\nactive backend at import: {textsim.backend()}")


if __name__ == "__main__":
    main()
