"""Benchmark the Gauss-Seidel sweep kernels (compiled vs pure Python).

Assembles the one-step system for a model at a given resolution and times
full solver passes (one sweep plus one residual evaluation) with each
available kernel backend on identical inputs.

    python benchmarks/sweep_benchmark.py --model models/exposure_window.json \
        --grid 64 --passes 20
"""

import argparse
import time

import numpy as np

from pathprob import modelio
from pathprob.kernels import available_backends
from pathprob.product import build_graph
from pathprob.scheme import assemble_gamma_prime, build_grid


def time_backend(sweep, residual, system, passes):
    order = np.argsort(system.horizons, kind="stable").astype(np.int64)
    x = np.zeros(system.size)
    args = (system.indptr, system.indices, system.data, system.offset)
    started = time.perf_counter()
    for _ in range(passes):
        sweep(*args, x, order)
        residual(*args, x)
    elapsed = time.perf_counter() - started
    return elapsed / passes, residual(*args, x)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="models/exposure_window.json")
    parser.add_argument("--grid", type=int, default=64)
    parser.add_argument("--passes", type=int, default=20)
    args = parser.parse_args()

    chain, dta = modelio.parse_model(args.model)
    graph = build_graph(chain, dta)
    started = time.perf_counter()
    system = assemble_gamma_prime(build_grid(chain, dta, graph, args.grid))
    assembly = time.perf_counter() - started
    print(
        f"model={args.model} m={args.grid} unknowns={system.size} "
        f"nnz={len(system.data)} (assembly {assembly:.2f}s)"
    )

    backends = available_backends()
    results = {}
    for name, (sweep, residual) in sorted(backends.items()):
        per_pass, final_residual = time_backend(sweep, residual, system,
                                                args.passes)
        results[name] = per_pass
        print(
            f"{name:>9}: {per_pass * 1e3:9.3f} ms/pass "
            f"(residual after {args.passes} passes: {final_residual:.2e})"
        )
    if "compiled" in results and "python" in results:
        print(f"  speedup: {results['python'] / results['compiled']:.1f}x")
    else:
        print("  compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
