"""Compare the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--quick]

Times a batch of affine-gap alignments and a full quartet scan on both
backends and checks that every result agrees.
"""

import argparse
import time

import numpy as np

from cogforge.kernels import _native, _pyback


def _align_batch(rng, count, max_len):
    cases = []
    for _ in range(count):
        n_symbols = int(rng.integers(3, 12))
        subst = rng.uniform(-2.0, 2.0, size=(n_symbols, n_symbols))
        subst = (subst + subst.T) / 2.0
        a = rng.integers(0, n_symbols, size=int(rng.integers(1, max_len)))
        b = rng.integers(0, n_symbols, size=int(rng.integers(1, max_len)))
        cases.append((a.astype(np.int64), b.astype(np.int64), subst))
    return cases


def _run_alignments(impl, cases):
    out = []
    for a, b, subst in cases:
        out.append(impl.align_affine(a, b, subst, -1.0, -0.5))
    return out


def _random_unit_matrix(rng, n):
    # distances of a random binary tree, cheap Prüfer-free construction
    from cogforge.trees import parse_newick, topological_leaf_distances

    labels = [f"t{i}" for i in range(n)]
    nodes = list(labels)
    while len(nodes) > 2:
        i, j = sorted(rng.choice(len(nodes), size=2, replace=False))
        merged = f"({nodes[i]},{nodes[j]})"
        nodes = [x for k, x in enumerate(nodes) if k not in (i, j)]
        nodes.append(merged)
    tree = parse_newick(f"({nodes[0]},{nodes[1]});")
    _, dist = topological_leaf_distances(tree)
    return np.asarray(dist, dtype=np.int64)


def _timeit(fn):
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller workload (for CI smoke runs)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n_align = 400 if args.quick else 4000
    max_len = 24 if args.quick else 40
    n_leaves = 60 if args.quick else 161

    cases = _align_batch(rng, n_align, max_len)
    native_res, t_native = _timeit(lambda: _run_alignments(_native, cases))
    pure_res, t_pure = _timeit(lambda: _run_alignments(_pyback, cases))
    for (ns, np_path), (ps, pp_path) in zip(native_res, pure_res):
        assert ns == ps and np.array_equal(np_path, pp_path)
    print(f"alignment  x{n_align:<5d} native {t_native:8.3f}s   "
          f"python {t_pure:8.3f}s   speedup {t_pure / t_native:6.1f}x")

    d_gold = _random_unit_matrix(rng, n_leaves)
    d_inf = _random_unit_matrix(rng, n_leaves)
    native_q, t_native = _timeit(lambda: _native.quartet_counts(d_inf, d_gold))
    pure_q, t_pure = _timeit(lambda: _pyback.quartet_counts(d_inf, d_gold))
    assert native_q == pure_q
    print(f"quartets   n={n_leaves:<4d} native {t_native:8.3f}s   "
          f"python {t_pure:8.3f}s   speedup {t_pure / t_native:6.1f}x")
    print("all results agree across backends")


if __name__ == "__main__":
    main()
