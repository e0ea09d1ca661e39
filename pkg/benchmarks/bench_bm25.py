"""Time the compiled scoring kernel against the pure-Python fallback.

Builds one synthetic corpus, scores the same query batch through both
backends, checks the outputs are bitwise identical, and prints a table.

    python3 benchmarks/bench_bm25.py --docs 20000 --queries 200
"""

import argparse
import time

import numpy as np

from parafuse import _kernels
from parafuse.lexical import build_index, score_all


def synth_corpus(rng, n_docs, vocab_size, mean_len):
    # zipf-ish term draw so posting lists vary in length like real text
    ranks = np.arange(1, vocab_size + 1, dtype=np.float64)
    weights = 1.0 / ranks
    weights /= weights.sum()
    vocab = np.array([f"t{j:05d}" for j in range(vocab_size)])
    lengths = np.maximum(1, rng.poisson(mean_len, size=n_docs))
    stream = rng.choice(vocab, size=int(lengths.sum()), p=weights)
    bounds = np.concatenate(([0], np.cumsum(lengths)))
    docs = [
        (f"d{i:06d}", " ".join(stream[bounds[i]:bounds[i + 1]]))
        for i in range(n_docs)
    ]
    return docs, vocab, weights


def run_backend(name, index, queries):
    _kernels.use_backend(name)
    outputs = []
    started = time.perf_counter()
    for query in queries:
        outputs.append(score_all(index, query))
    elapsed = time.perf_counter() - started
    return elapsed, outputs


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=20000)
    parser.add_argument("--vocab", type=int, default=5000)
    parser.add_argument("--mean-len", type=int, default=60)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    docs, vocab, weights = synth_corpus(rng, args.docs, args.vocab,
                                        args.mean_len)
    index = build_index(docs)
    queries = [
        " ".join(rng.choice(vocab, size=int(rng.integers(2, 9)), p=weights))
        for _ in range(args.queries)
    ]
    print(f"corpus: {index.n_items} docs, {len(index.postings)} terms, "
          f"avg length {index.avg_length:.1f}")
    print(f"queries: {len(queries)}")

    if not _kernels.HAVE_NATIVE:
        print("native kernel not built; timing the fallback only")

    results = {}
    try:
        for name in ("python", "native") if _kernels.HAVE_NATIVE else ("python",):
            results[name] = run_backend(name, index, queries)
    finally:
        _kernels.use_backend("auto")

    print()
    print(f"{'backend':<10}{'total s':>10}{'ms/query':>12}")
    for name, (elapsed, _) in results.items():
        print(f"{name:<10}{elapsed:>10.3f}{1000 * elapsed / len(queries):>12.3f}")

    if len(results) == 2:
        py_time, py_out = results["python"]
        c_time, c_out = results["native"]
        identical = all((a == b).all() for a, b in zip(py_out, c_out))
        print(f"\nspeedup: {py_time / c_time:.1f}x")
        print(f"outputs bitwise identical: {identical}")
        if not identical:
            raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
