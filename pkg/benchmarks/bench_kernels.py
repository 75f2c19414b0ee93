"""Compare the compiled and pure-Python kernels on grid-sized k-DAGs.

    python benchmarks/bench_kernels.py [--nodes 100] [--side 350] [--repeat 3]
"""

import argparse
import timeit

from kdag import kernels
from kdag.builder import build_kdag
from kdag.energy import EnergyModel, PolicyKind, RoutingPolicy, run_rounds
from kdag.graph import build_spd, generate_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=100)
    ap.add_argument("--side", type=float, default=350.0)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    g = generate_instance(args.nodes, args.side, 50.0, args.seed)
    spd = build_spd(g)
    dag = build_kdag(spd, g.n, g).dag
    model = EnergyModel()
    backends = [kernels.get_backend("python")]
    try:
        backends.append(kernels.get_backend("cython"))
    except ImportError:
        print("compiled extension not built; timing the fallback only")

    cases = {
        "topological_order": lambda b: b.topological_order(dag.parents),
        "path_ranges": lambda b: b.path_ranges(dag.parents, dag.order),
        "dag_loads": lambda b: b.dag_loads(dag.parents, dag.order),
    }
    for kind in PolicyKind:
        cases[f"lifetime[{kind.value}]"] = (
            lambda b, kind=kind: run_rounds(dag, model, RoutingPolicy(kind), backend=b))

    print(f"n={g.n} side={args.side:g} edges={dag.edge_count} (sibling edges "
          f"{dag.edge_count - spd.edge_count})")
    print(f"{'kernel':<22}" + "".join(f"{b.name:>12}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases.items():
        times = []
        for b in backends:
            number = 1 if name.startswith("lifetime") else 200
            best = min(timeit.repeat(lambda: fn(b), number=number, repeat=args.repeat))
            times.append(best / number)
        row = f"{name:<22}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
