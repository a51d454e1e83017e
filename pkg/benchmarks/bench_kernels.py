"""Compare the compiled and pure-Python rule kernels.

Times batched mask evaluation on the medals fact space and one full MCTS run
per backend, and checks that both backends agree on every score.

    python3 benchmarks/bench_kernels.py [--masks 20000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import random
import time
from importlib import resources

from dspace.bench import generated_sets
from dspace.instantiate import build_fact_space, profile_dataset
from dspace.kernels import available_backends
from dspace.search import SearchConfig
from dspace.search.mcts import mcts_search
from dspace.search.problem import Problem


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--masks", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    csv_path = resources.files("dspace").joinpath("data/medals_toy.csv")
    space = build_fact_space(profile_dataset(str(csv_path)))
    _, cs = generated_sets(space, 1, args.seed)[0]
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the python backend is available")

    rng = random.Random(args.seed)
    ref = Problem(space, cs)
    population = [ref.random_picks(rng) for _ in range(args.masks)]
    buf = bytearray()
    for picks in population:
        buf += ref.mask(picks)
    singles = [ref.mask(p) for p in population[: args.masks // 4]]

    results = {}
    print(f"space: {space.n_elements} atoms, {len(cs)} rules, {args.masks} masks")
    print(f"{'backend':<8} {'batch (s)':>10} {'masks/s':>12} {'single (s)':>11} {'mcts (s)':>9}")
    for name, cls in backends.items():
        problem = Problem(space, cs, kernel_cls=cls)
        kernel = problem.kernel
        batch = best_of(lambda: kernel.evaluate_batch(buf), args.repeat)
        single = best_of(lambda: [kernel.evaluate(m) for m in singles], args.repeat)
        config = SearchConfig(seed=args.seed, max_iterations=5000, window=10**9)
        mcts = best_of(lambda: mcts_search(space, cs, config, problem=problem), 1)
        results[name] = kernel.evaluate_batch(buf)
        print(f"{name:<8} {batch:>10.4f} {args.masks / batch:>12.0f} {single:>11.4f} {mcts:>9.3f}")

    if len(results) == 2:
        same = results["python"] == results["cython"]
        print(f"backends agree on all {args.masks} masks: {same}")


if __name__ == "__main__":
    main()
