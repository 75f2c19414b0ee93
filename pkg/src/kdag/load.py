"""Even-split load calculation and the base-children balance factor."""

from __future__ import annotations

import math
from dataclasses import dataclass

from kdag import kernels
from kdag.graph import BASE, SpanningDag
from kdag.naming import ProtocolStall
from kdag.sim import EventCapExceeded, Kernel, MessageKind, Protocol


class EmptyChildren(ValueError):
    pass


@dataclass(frozen=True)
class LoadMap:
    """``load[v]`` counts data units per time unit through ``v`` (own unit
    included); ``edge_share[(child, parent)]`` is what flows over that edge."""

    load: tuple[float, ...]
    edge_share: dict
    base_child_loads: dict

    def theta(self) -> float:
        return balance_factor(list(self.base_child_loads.values()))


def _load_map(dag: SpanningDag, load) -> LoadMap:
    load = list(load)
    load[BASE] = 0.0
    shares = {}
    for v in range(1, dag.num_nodes):
        s = load[v] / len(dag.parents[v])
        for p in dag.parents[v]:
            shares[(v, p)] = s
    base = {c: shares[(c, BASE)] for c in dag.children[BASE]}
    return LoadMap(tuple(load), shares, base)


def compute_load_oracle(dag: SpanningDag, backend=None) -> LoadMap:
    """Single reverse-topological pass."""
    kern = kernels if backend is None else backend
    return _load_map(dag, kern.dag_loads(dag.parents, dag.order))


class LoadProtocol(Protocol):
    """Bottom-up LC convergecast: a node reports once every child has."""

    def __init__(self, dag: SpanningDag):
        self.dag = dag

    def init_state(self, node):
        return {"load": 0.0 if node == BASE else 1.0, "heard": set(), "received": {}}

    def _report(self, ctx):
        ps = self.dag.parents[ctx.node]
        share = ctx.state["load"] / len(ps)
        for p in ps:
            ctx.send(p, MessageKind.LC, load=share)

    def start(self, ctx):
        if ctx.node != BASE and not self.dag.children[ctx.node]:
            self._report(ctx)

    def on_message(self, ctx, msg):
        st = ctx.state
        st["heard"].add(msg.src)
        st["received"][msg.src] = msg.payload["load"]
        if ctx.node == BASE:
            return
        if len(st["heard"]) == len(self.dag.children[ctx.node]):
            st["load"] = math.fsum([1.0, *st["received"].values()])
            self._report(ctx)


def run_load_calc(dag: SpanningDag, graph, seed: int = 0, **kernel_options) -> LoadMap:
    kernel = Kernel(graph, seed=seed, **kernel_options)
    try:
        result = kernel.run(LoadProtocol(dag))
    except EventCapExceeded as exc:
        raise ProtocolStall(str(exc)) from exc
    base = result.states[BASE]
    if len(base["heard"]) != len(dag.children[BASE]):
        raise ProtocolStall("base station did not hear from every child")
    loads = [s["load"] for s in result.states]
    loads[BASE] = 0.0
    shares = {}
    for v, st in enumerate(result.states):
        for c, share in st["received"].items():
            shares[(c, v)] = share
    return LoadMap(tuple(loads), shares, dict(sorted(base["received"].items())))


def balance_factor(loads) -> float:
    """(sum ld)^2 / (m * sum ld^2) over the base-station children."""
    loads = list(loads)
    m = len(loads)
    if m == 0:
        raise EmptyChildren("balance factor needs at least one base-station child")
    if m == 1:
        return 1.0
    total = sum(loads)
    return total * total / (m * sum(x * x for x in loads))
