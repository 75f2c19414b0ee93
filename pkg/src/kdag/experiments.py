"""SPD vs k-DAG comparison over a grid of random deployments."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields

from kdag.builder import build_kdag
from kdag.energy import EnergyModel, RoutingPolicy, simulate_lifetime
from kdag.graph import ConnectivityFailure, ConnectivityGraph, build_spd, derive_seed, generate_instance
from kdag.load import compute_load_oracle

log = logging.getLogger(__name__)

CSV_HEADER = ("n", "side", "seed", "k", "policy", "theta_spd", "theta_kdag", "life_spd",
              "life_kdag", "edges_added", "max_p")
MAX_REGENERATIONS = 100


@dataclass(frozen=True)
class ScenarioGrid:
    sizes: tuple[int, ...] = (50, 60, 70, 80, 90, 100)
    areas: tuple[float, ...] = (100, 150, 200, 250, 300, 350)
    range: float = 50.0
    instances_per_scenario: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if len(self.sizes) != len(self.areas):
            raise ValueError("sizes and areas are paired one to one")
        if self.instances_per_scenario < 1:
            raise ValueError("need at least one instance per scenario")

    def scenarios(self):
        return list(zip(self.sizes, self.areas))


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    side: float
    seed: int
    k: int
    policy: str
    theta_spd: float
    theta_kdag: float
    life_spd: int
    life_kdag: int
    edges_added: int
    max_p: int


@dataclass
class ExperimentResult:
    rows: list[ExperimentRow]
    substitutions: list[tuple[int, int, int]] = field(default_factory=list)

    def aggregates(self) -> dict:
        """Per-scenario avg/max/min of theta and lifetime, keyed by ``(n, side)``."""
        out = {}
        for key in sorted({(r.n, r.side) for r in self.rows}):
            rows = [r for r in self.rows if (r.n, r.side) == key]
            stats = {}
            for metric in ("theta_spd", "theta_kdag", "life_spd", "life_kdag"):
                vals = [getattr(r, metric) for r in rows]
                stats[metric] = {"avg": sum(vals) / len(vals), "max": max(vals), "min": min(vals)}
            out[key] = stats
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([_fmt(x) for x in astuple(r)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        """Long format: one line per (scenario, metric, statistic, topology)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n", "side", "metric", "stat", "topology", "value"))
        for (n, side), stats in self.aggregates().items():
            for metric, by_stat in stats.items():
                name, topo = metric.rsplit("_", 1)
                for stat, value in by_stat.items():
                    w.writerow((n, _fmt(side), name, stat, topo, _fmt(value)))
        return buf.getvalue()

    def to_json(self) -> list[dict]:
        return [{f.name: getattr(r, f.name) for f in fields(r)} for r in self.rows]


def _fmt(x):
    if isinstance(x, float):
        return repr(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)
    return str(x)


def saturated_build(spd, graph, seed=0, **options):
    """Build with no effective slack limit; returns ``(build, k_sat)``."""
    build = build_kdag(spd, spd.n, graph, seed=seed, **options)
    return build, build.dag.max_slack()


def evaluate_instance(graph: ConnectivityGraph, k="max", policy="mpe", model=None,
                      seed: int = 0) -> ExperimentRow:
    policy = RoutingPolicy.parse(policy)
    model = model or EnergyModel()
    spd = build_spd(graph)
    if k == "max":
        build, k_used = saturated_build(spd, graph, seed=seed)
    else:
        k_used = int(k)
        build = build_kdag(spd, k_used, graph, seed=seed)
    life_spd = simulate_lifetime(spd, model, policy)
    life_kdag = simulate_lifetime(build.dag, model, policy)
    return ExperimentRow(graph.n, graph.side, graph.seed, k_used, policy.kind.value,
                         life_spd.theta, life_kdag.theta, life_spd.lifetime_hours,
                         life_kdag.lifetime_hours, len(build.edge_log),
                         build.dag.max_path_length())


def instance_seed(base_seed: int, n: int, side: float, index: int) -> int:
    return derive_seed(base_seed, n, side, index)


def _generate(grid: ScenarioGrid, n, side, index):
    seed = instance_seed(grid.base_seed, n, side, index)
    for retry in range(MAX_REGENERATIONS):
        try:
            return generate_instance(n, side, grid.range, seed), retry
        except ConnectivityFailure:
            seed = derive_seed(grid.base_seed, n, side, index, "retry", retry)
    raise ConnectivityFailure(f"scenario n={n} side={side} index={index} never connected")


def _grid_task(args):
    grid, n, side, index, k, policy = args
    graph, retries = _generate(grid, n, side, index)
    return evaluate_instance(graph, k, policy), retries


def run_grid(grid: ScenarioGrid = ScenarioGrid(), k="max", policy="mpe",
             jobs: int = 1) -> ExperimentResult:
    tasks = [(grid, n, side, i, k, policy)
             for n, side in grid.scenarios() for i in range(grid.instances_per_scenario)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            outcomes = list(pool.map(_grid_task, tasks))
    else:
        outcomes = [_grid_task(t) for t in tasks]
    result = ExperimentResult([row for row, _ in outcomes])
    for (_, n, side, i, _, _), (_, retries) in zip(tasks, outcomes):
        if retries:
            log.info("scenario n=%s side=%s instance %s regenerated %d times", n, side, i, retries)
            result.substitutions.append((n, i, retries))
    return result


@dataclass(frozen=True)
class SweepPoint:
    k: int
    ratio: float
    lifetime: int
    edges_added: int
    max_p: int


def k_sweep(graph: ConnectivityGraph, policy="mpe", model=None, seed: int = 0) -> list[SweepPoint]:
    """Lifetime at every k from 0 to saturation, relative to the unbounded build."""
    policy = RoutingPolicy.parse(policy)
    model = model or EnergyModel()
    spd = build_spd(graph)
    sat, k_sat = saturated_build(spd, graph, seed=seed)
    life_sat = simulate_lifetime(sat.dag, model, policy).lifetime_hours
    points = []
    for k in range(k_sat + 1):
        build = build_kdag(spd, k, graph, seed=seed)
        life = simulate_lifetime(build.dag, model, policy).lifetime_hours
        points.append(SweepPoint(k, life / life_sat, life, len(build.edge_log),
                                 build.dag.max_path_length()))
    return points


def sweep_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("k", "ratio", "lifetime", "edges_added", "max_p"))
    for p in points:
        w.writerow([_fmt(x) for x in astuple(p)])
    return buf.getvalue()
