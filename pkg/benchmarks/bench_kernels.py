"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times k0 on a complex cloud, tabulated M evaluation, and one full kernel-matrix
assembly under each available backend, and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from cohilbert import special_functions as sf
from cohilbert.flow_kernels import FlowParams, MTable
from cohilbert.fredholm import assemble_n_matrix
from cohilbert.nystrom import KuttaGrid


def cases():
    rng = np.random.default_rng(0)
    z = rng.uniform(1e-3, 60, 100_000) + 1j * rng.uniform(-40, 40, 100_000)
    p = FlowParams()
    lam = 0.75 + 3j
    table = MTable(p, lam, 12.0)
    x = rng.uniform(-12, 12, 200_000)
    grid = KuttaGrid(2.0, 128)
    return {
        "k0, 1e5 points": (lambda: sf.k0(z), lambda: sf.k0(z)),
        "M table, 2e5 points": (lambda: table(x), lambda: table(x)),
        "N matrix, 128 nodes": (lambda: assemble_n_matrix(p, grid, lam).entries, None),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if sf._compiled is not None else [])
    results, values = {}, {}
    for name in backends:
        sf.set_backend(name)
        for label, (fn, check) in cases().items():
            results[(label, name)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            values[(label, name)] = fn() if check is not None else None
    print(f"{'case':<24}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label in cases():
        row = f"{label:<24}" + "".join(f"{results[(label, b)]:>11.3f}s" for b in backends)
        if len(backends) == 2:
            row += f"{results[(label, 'python')] / results[(label, 'cython')]:>11.1f}x"
            a, b = values[(label, "python")], values[(label, "cython")]
            if a is not None:
                row += f"   max rel diff {np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)):.1e}"
        print(row)


if __name__ == "__main__":
    main()
