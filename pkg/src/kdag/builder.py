"""Sibling-edge insertion: grow a k-DAG out of the SPD, round by round.

Each round the base station picks its heaviest eligible child ``v_i`` and the
lightest base child ``v_j`` adjacent to it, floods SF over the DAG rooted at
``v_i`` and collects SF-c offers from nodes that sit next to ``v_j``'s DAG.
The best offer gets SF-s; from there an ADD-SIBLING cascade walks sideways
(siblings adopt the previous node as an extra parent) and downwards until the
budget or the path slack ``k`` runs out, and the last node answers SF-ACK.
The base then floods RECALC, which refreshes every node's load and reachable
base children through an LC convergecast, and the next round starts.

Every edge ``child -> parent`` is admitted only if the DAG stays acyclic, no
node's longest path exceeds its shortest by more than ``k``, the light child's
new load stays below the heavy child's load at the start of the round, and the
sum of squared base-child loads does not grow (diverted flow can also land on
a third base child). Those checks use the base station's global view.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

from kdag import kernels
from kdag.graph import BASE, ConnectivityGraph, DagKind, SpanningDag, extract_spt
from kdag.naming import NameTable, ProtocolStall, next_hop, run_naming
from kdag.sim import DEFAULT_MAX_DELAY, EventCapExceeded, Kernel, MessageKind, Protocol, RunResult

MK = MessageKind


class NotACandidate(ValueError):
    pass


@dataclass(frozen=True)
class SiblingEdge:
    """``child`` (``from``) adopts ``parent`` (``to``); both sit at ``level``."""

    round: int
    child: int
    parent: int
    level: int
    ldc: float

    def to_dict(self) -> dict:
        return {"round": self.round, "from": self.child, "to": self.parent,
                "level": self.level, "ldc": self.ldc}


@dataclass
class BuildResult:
    dag: SpanningDag
    edge_log: list[SiblingEdge]
    rounds: int
    k: int
    run: RunResult | None = None
    late_offers: int = 0
    events: list = field(default_factory=list)

    def edge_log_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.edge_log])


def candidate_diverted_load(load: float, parent_count: int, mode: str = "post") -> float:
    """Share of a node's load a new sibling parent would take."""
    if parent_count < 1:
        raise NotACandidate("only sensors with a parent can divert load")
    if mode == "post":
        return load / (parent_count + 1)
    if mode == "pre":
        return load / parent_count
    raise ValueError(f"unknown mode {mode!r}")


class _World:
    """The DAG under construction plus what nodes and the base know about it."""

    def __init__(self, graph: ConnectivityGraph, spd: SpanningDag, k: int, ldc_mode: str,
                 energy: float):
        self.graph = graph
        self.k = k
        self.ldc_mode = ldc_mode
        self.depth = spd.depth
        self.parents = [set(p) for p in spd.parents]
        self.children = [set(c) for c in spd.children]
        n = spd.num_nodes
        # node-local knowledge, refreshed by RECALC
        self.load = [0.0] * n
        self.reach = [frozenset()] * n
        self.energy = [energy] * n
        self.edge_log: list[SiblingEdge] = []
        self.round = 0
        self.added_this_round = 0
        self.v_i = self.v_j = None
        self.heavy_load = 0.0
        self.maxp = spd.max_path_length()
        self._refresh()

    # ---- base station's global view -------------------------------------
    def _refresh(self):
        order = kernels.topological_order(self.parents)
        if order is None:
            raise RuntimeError("sibling edge created a cycle")
        self.order = order
        self.pos = {v: i for i, v in enumerate(order)}
        self.cur_load = kernels.dag_loads(self.parents, order)
        self.shortest, self.longest = kernels.path_ranges(self.parents, order)

    def ldc(self, v: int) -> float:
        return candidate_diverted_load(self.load[v], len(self.parents[v]), self.ldc_mode)

    def _is_sibling_pair(self, a: int, b: int) -> bool:
        return (b in self.graph.adjacency[a] and self.depth[a] == self.depth[b]
                and b not in self.parents[a] and a not in self.parents[b])

    def _reaches(self, src: int, dst: int) -> bool:
        stack = [src]
        seen = {src}
        while stack:
            u = stack.pop()
            if u == dst:
                return True
            for c in self.children[u]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def admissible(self, child: int, parent: int) -> bool:
        """Acyclic, slack within ``k`` everywhere, light child stays below heavy."""
        if child == BASE or not self._is_sibling_pair(child, parent):
            return False
        if self._reaches(child, parent):
            return False
        k = self.k
        longest = self.longest
        shortest = self.shortest
        bump = {child: max(longest[child], longest[parent] + 1)}
        if bump[child] == longest[child]:
            bump = {}
        elif bump[child] - shortest[child] > k:
            return False
        stack = list(bump)
        while stack:
            u = stack.pop()
            for c in self.children[u]:
                cand = bump[u] + 1
                if cand > bump.get(c, longest[c]):
                    if cand - shortest[c] > k:
                        return False
                    bump[c] = cand
                    stack.append(c)
        delta = self._load_deltas(child, parent)
        load = self.cur_load
        if not load[self.v_j] + delta.get(self.v_j, 0.0) < self.heavy_load:
            return False
        # the diverted flow may also reach other base children; never unbalance them
        kids = self.children[BASE]
        before = sum(load[c] * load[c] for c in kids)
        after = sum((load[c] + delta.get(c, 0.0)) ** 2 for c in kids)
        return after <= before * (1 + 1e-12)

    def _load_deltas(self, child: int, parent: int) -> dict:
        """Load changes of every ancestor once ``child`` also feeds ``parent``;
        deltas only travel upward, so the current topological order applies."""
        load = self.cur_load
        pos = self.pos
        p = len(self.parents[child])
        old_share = load[child] / p
        new_share = load[child] / (p + 1)
        delta = {q: new_share - old_share for q in self.parents[child]}
        delta[parent] = delta.get(parent, 0.0) + new_share
        heap = [(-pos[v], v) for v in delta]
        heapq.heapify(heap)
        while heap:
            _, u = heapq.heappop(heap)
            if u == BASE:
                continue
            ps = self.parents[u]
            share = delta[u] / len(ps)
            for q in ps:
                if q not in delta:
                    delta[q] = 0.0
                    heapq.heappush(heap, (-pos[q], q))
                delta[q] += share
        return delta

    def add_edge(self, child: int, parent: int, ldc: float) -> None:
        self.parents[child].add(parent)
        self.children[parent].add(child)
        self.edge_log.append(SiblingEdge(self.round, child, parent, self.depth[child], ldc))
        self.added_this_round += 1
        self._refresh()

    def neighbour_children(self, vi: int) -> set[int]:
        """Base children reachable through a same-depth link from a node of
        ``vi``'s DAG to a node outside that child's DAG."""
        found = set()
        reach = self.reach
        for v in range(1, len(self.parents)):
            rv = reach[v]
            if vi not in rv or self.depth[v] < 2:
                continue
            for t in self.graph.adjacency[v]:
                if self.depth[t] == self.depth[v]:
                    found |= reach[t] - rv
        return found

    # ---- node-local decisions ---------------------------------------------
    def best_target(self, v: int):
        """Neighbour at the same depth inside ``v_j``'s DAG that ``v`` may adopt."""
        vj = self.v_j
        targets = [t for t in self.graph.adjacency[v]
                   if self._is_sibling_pair(v, t) and vj in self.reach[t]]
        targets.sort(key=lambda t: (self.load[t], t))
        for t in targets:
            if self.admissible(v, t):
                return t
        return None

    def best_extension(self, x: int, ldre: float):
        """Sibling of ``x`` still outside ``v_j``'s DAG that can adopt ``x``."""
        vi, vj = self.v_i, self.v_j
        options = []
        for y in self.graph.adjacency[x]:
            if not self._is_sibling_pair(x, y):
                continue
            if vi not in self.reach[y] or vj in self.reach[y]:
                continue
            c = self.ldc(y)
            if c <= ldre:
                options.append((-c, y))
        for _, y in sorted(options):
            if self.admissible(y, x):
                return y
        return None

    def heaviest_child(self, x: int):
        kids = self.children[x]
        if not kids:
            return None
        return min(kids, key=lambda c: (-self.load[c], c))

    def to_dag(self) -> SpanningDag:
        return SpanningDag.from_parents(self.parents, self.depth, DagKind.KDAG)


class SiblingEdgeProtocol(Protocol):
    def __init__(self, world: _World, max_delay: int, log_events: bool = False):
        self.w = world
        self.max_delay = max_delay
        self.epoch = 0
        self.finished = False
        self.late_offers = 0
        self.log_events = log_events
        self.events = []

    def _note(self, *item):
        if self.log_events:
            self.events.append(item)

    def init_state(self, node):
        if node == BASE:
            return {"flags": {}, "loads": {}, "maxp": {}, "offers": [], "timer": None,
                    "ldbl": 0.0}
        return {"epoch": -1, "sf_round": 0}

    def start(self, ctx):
        if ctx.node == BASE:
            kids = sorted(self.w.children[BASE])
            ctx.state["flags"] = {c: True for c in kids}
            self._recalc(ctx)

    # ---- base station -----------------------------------------------------
    def _recalc(self, ctx):
        self.epoch += 1
        ctx.state["loads"] = {}
        ctx.state["maxp"] = {}
        for c in sorted(self.w.children[BASE]):
            ctx.send(c, MK.RECALC, epoch=self.epoch, reach=frozenset(), longest=0)

    def _next_round(self, ctx):
        st = ctx.state
        w = self.w
        loads = st["loads"]
        while True:
            flagged = [c for c, ok in st["flags"].items() if ok]
            if not flagged:
                self.finished = True
                return
            vi = min(flagged, key=lambda c: (-loads[c], c))
            linked = w.neighbour_children(vi)
            nbrs = [c for c in loads if c in linked and loads[c] < loads[vi]]
            if not nbrs:
                st["flags"][vi] = False
                continue
            vj = min(nbrs, key=lambda c: (loads[c], c))
            break
        w.round += 1
        w.added_this_round = 0
        w.v_i, w.v_j = vi, vj
        w.heavy_load = loads[vi]
        st["ldbl"] = (loads[vi] - loads[vj]) / 2
        st["offers"] = []
        self._note("round", w.round, vi, vj, st["ldbl"])
        ctx.send(vi, MK.SF, round=w.round, v_i=vi, v_j=vj, ldbl=st["ldbl"])
        st["timer"] = ctx.set_timer(timer_t1(w.graph, w.maxp, self.max_delay), "T1")

    def on_timer(self, ctx, timer):
        st = ctx.state
        st["timer"] = None
        w = self.w
        if not st["offers"]:
            st["flags"][w.v_i] = False
            self._note("no-offer", w.round, w.v_i)
            self._next_round(ctx)
            return
        # largest LdC, then higher residual energy, then smallest id
        ldc, _, vs, vt = max(st["offers"], key=lambda o: (o[0], o[1], -o[2]))
        ctx.send(vs, MK.SF_S, round=w.round, v_s=vs, v_t=vt, v_i=w.v_i, v_j=w.v_j,
                 ldre=st["ldbl"], sl=0)

    def _base_message(self, ctx, msg):
        st = ctx.state
        p = msg.payload
        w = self.w
        if msg.kind is MK.LC:
            if p["epoch"] != self.epoch:
                return
            st["loads"][msg.src] = p["load"]
            st["maxp"][msg.src] = p["maxp"]
            if len(st["loads"]) == len(w.children[BASE]):
                st["loads"] = dict(sorted(st["loads"].items()))
                w.maxp = max(st["maxp"].values())
                self._next_round(ctx)
        elif msg.kind is MK.SF_C:
            if st["timer"] is None or p["round"] != w.round:
                self.late_offers += 1
                return
            st["offers"].append((p["ldc"], p["energy"], p["v_s"], p["v_t"]))
        elif msg.kind is MK.SF_ACK:
            st["flags"][w.v_i] = w.added_this_round > 0
            self._note("ack", w.round, p["v_sm"], p["ldre"], p["sl"])
            self._recalc(ctx)

    # ---- sensor nodes -----------------------------------------------------
    def on_message(self, ctx, msg):
        if ctx.node == BASE:
            self._base_message(ctx, msg)
            return
        kind = msg.kind
        if kind is MK.RECALC:
            self._on_recalc(ctx, msg)
        elif kind is MK.LC:
            self._on_lc(ctx, msg)
        elif kind is MK.SF:
            self._on_sf(ctx, msg)
        elif kind is MK.SF_S:
            self._on_sf_s(ctx, msg)
        elif kind is MK.ADD_SIBLING:
            self._on_add_sibling(ctx, msg)
        else:
            raise ValueError(f"unexpected {kind} at node {ctx.node}")

    def _reset_epoch(self, st, epoch):
        st.update(epoch=epoch, rc_from=set(), reach=set(), longest=0, lc_from=set(),
                  acc={}, sub_maxp=0, rc_done=False)

    def _on_recalc(self, ctx, msg):
        st = ctx.state
        v = ctx.node
        p = msg.payload
        if st["epoch"] != p["epoch"]:
            self._reset_epoch(st, p["epoch"])
        st["rc_from"].add(msg.src)
        st["reach"] |= p["reach"]
        if msg.src == BASE:
            st["reach"].add(v)
        st["longest"] = max(st["longest"], p["longest"] + 1)
        if len(st["rc_from"]) < len(self.w.parents[v]):
            return
        st["rc_done"] = True
        reach = frozenset(st["reach"])
        self.w.reach[v] = reach
        for c in sorted(self.w.children[v]):
            ctx.send(c, MK.RECALC, epoch=st["epoch"], reach=reach, longest=st["longest"])
        self._maybe_report(ctx)

    def _on_lc(self, ctx, msg):
        st = ctx.state
        p = msg.payload
        if st["epoch"] != p["epoch"]:
            self._reset_epoch(st, p["epoch"])
        st["lc_from"].add(msg.src)
        st["acc"][msg.src] = p["load"]
        st["sub_maxp"] = max(st["sub_maxp"], p["maxp"])
        self._maybe_report(ctx)

    def _maybe_report(self, ctx):
        st = ctx.state
        v = ctx.node
        if not st["rc_done"] or len(st["lc_from"]) < len(self.w.children[v]):
            return
        # order-independent sum: message timing must not change the result
        load = math.fsum([1.0, *st["acc"].values()])
        self.w.load[v] = load
        ps = sorted(self.w.parents[v])
        maxp = max(st["sub_maxp"], st["longest"])
        for q in ps:
            ctx.send(q, MK.LC, epoch=st["epoch"], load=load / len(ps), maxp=maxp)

    def _on_sf(self, ctx, msg):
        st = ctx.state
        v = ctx.node
        p = msg.payload
        if st["sf_round"] == p["round"]:
            return
        st["sf_round"] = p["round"]
        for c in sorted(self.w.children[v]):
            ctx.send(c, MK.SF, **p)
        w = self.w
        if v == p["v_i"] or p["v_j"] in w.reach[v]:
            return
        ldc = w.ldc(v)
        if not ldc < p["ldbl"]:
            return
        vt = w.best_target(v)
        if vt is not None:
            ctx.send(BASE, MK.SF_C, round=p["round"], v_s=v, v_t=vt, v_i=p["v_i"],
                     v_j=p["v_j"], ldc=ldc, energy=w.energy[v])

    def _ack(self, ctx, ldre, sl):
        w = self.w
        ctx.send(BASE, MK.SF_ACK, round=w.round, v_sm=ctx.node, v_i=w.v_i, v_j=w.v_j,
                 ldre=ldre, sl=sl)

    def _on_sf_s(self, ctx, msg):
        p = msg.payload
        v = ctx.node
        w = self.w
        if not w.admissible(v, p["v_t"]):
            self._ack(ctx, p["ldre"], p["sl"])
            return
        ldc = w.ldc(v)
        w.add_edge(v, p["v_t"], ldc)
        self._note("edge", w.round, v, p["v_t"])
        self._extend(ctx, p["ldre"] - ldc, p["sl"] + 1)

    def _on_add_sibling(self, ctx, msg):
        p = msg.payload
        v = ctx.node
        w = self.w
        ldre, sl = p["ldre"], p["sl"]
        if p["attach"]:
            if not w.admissible(v, msg.src):
                self._ack(ctx, ldre, sl)
                return
            ldc = w.ldc(v)
            w.add_edge(v, msg.src, ldc)
            self._note("edge", w.round, v, msg.src)
            self._extend(ctx, ldre - ldc, sl + 1)
            return
        self._note("down", w.round, v)
        if sl >= w.k or ldre <= 0:
            self._ack(ctx, ldre, sl)
            return
        self._extend(ctx, ldre, sl)

    def _extend(self, ctx, ldre, sl):
        w = self.w
        v = ctx.node
        if sl < w.k:
            y = w.best_extension(v, ldre)
            if y is not None:
                ctx.send(y, MK.ADD_SIBLING, round=w.round, attach=True, ldre=ldre, sl=sl)
                return
        c = w.heaviest_child(v)
        if c is not None:
            ctx.send(c, MK.ADD_SIBLING, round=w.round, attach=False, ldre=ldre, sl=sl)
            return
        self._ack(ctx, ldre, sl)


def timer_t1(graph: ConnectivityGraph, max_path: int, max_delay: int) -> int:
    """Long enough for SF to reach any node and its SF-c to come back."""
    return 2 * max_delay * max(graph.diameter, max_path) + 1


def build_kdag(spd: SpanningDag, k: int, graph: ConnectivityGraph, seed: int = 0,
               max_delay: int = DEFAULT_MAX_DELAY, ldc_mode: str = "post",
               names: NameTable | None = None, e_init: float = 0.05,
               record_trace: bool = False, log_events: bool = False,
               **kernel_options) -> BuildResult:
    """Run the sibling-edge protocol on ``spd`` and return the k-DAG."""
    if spd.kind is not DagKind.SPD:
        raise ValueError("build_kdag expects an SPD")
    if k < 0:
        raise ValueError("k must be >= 0")
    spt = extract_spt(spd)
    if names is None:
        names = run_naming(spt, graph, seed=seed, max_delay=max_delay)
    world = _World(graph, spd, k, ldc_mode, e_init)

    def up(at):
        return spt.parents[at][0]

    def down(at, dst):
        return next_hop(names, spt, at, names.id[dst])

    kernel = Kernel(graph, seed=seed, max_delay=max_delay, up_route=up, down_route=down,
                    record_trace=record_trace, **kernel_options)
    protocol = SiblingEdgeProtocol(world, max_delay, log_events)
    try:
        run = kernel.run(protocol)
    except EventCapExceeded as exc:
        raise ProtocolStall(str(exc)) from exc
    if not protocol.finished:
        raise ProtocolStall("sibling-edge protocol went quiet before finishing")
    return BuildResult(world.to_dag(), list(world.edge_log), world.round, k, run,
                       protocol.late_offers, protocol.events)

