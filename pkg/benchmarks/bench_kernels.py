"""Compare the compiled and pure-Python VC kernels on random set families.

Usage: python3 benchmarks/bench_kernels.py [--n 14] [--families 20] [--size 200]
"""

import argparse
import random
import timeit

from robcert.kernels import backends


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=14, help="ground set size (at most 20)")
    ap.add_argument("--families", type=int, default=20)
    ap.add_argument("--size", type=int, default=200, help="sets per family")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    fams = [sorted({rng.getrandbits(args.n) for _ in range(args.size)}) for _ in range(args.families)]
    impls = backends()
    results = {}
    for name, impl in sorted(impls.items()):
        dims = [impl.vc_dimension(f, args.n) for f in fams]
        secs = min(timeit.repeat(lambda: [impl.vc_dimension(f, args.n) for f in fams], number=1, repeat=3))
        results[name] = (secs, dims)
        print(f"{name:>7}: {secs * 1000:9.2f} ms for {args.families} families (n={args.n}, |F|<={args.size})")
    if len(results) == 2:
        (py_t, py_d), (cy_t, cy_d) = results["python"], results["cython"]
        assert py_d == cy_d, "backends disagree"
        print(f"speedup: {py_t / cy_t:.1f}x")
    else:
        print("compiled backend not available; only the Python timing is shown")


if __name__ == "__main__":
    main()
