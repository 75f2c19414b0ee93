"""Subtree-size naming on the SPT and ID-range point-to-point routing.

Every sensor ends up with its rank in a depth-first preorder of the SPT
(children visited in ascending node order), so each subtree owns one
contiguous ID interval and a message can be steered by interval lookup.
"""

from __future__ import annotations

from dataclasses import dataclass

from kdag.graph import BASE, DagKind, SpanningDag
from kdag.sim import EventCapExceeded, MessageKind, Protocol, Kernel

MK = MessageKind


class ProtocolStall(RuntimeError):
    """The kernel hit its event cap before the protocol finished."""


@dataclass(frozen=True)
class NameTable:
    id: tuple[int, ...]
    subtree_size: tuple[int, ...]
    id_range: tuple[tuple[int, int], ...]

    def owner_of(self, target_id: int) -> int:
        return self.id.index(target_id)


class NamingProtocol(Protocol):
    def __init__(self, spt: SpanningDag):
        self.spt = spt

    def init_state(self, node):
        kids = self.spt.children[node]
        return {"size": 0 if node == BASE else 1, "sizes": {}, "expect": len(kids),
                "id": 0 if node == BASE else None, "range": None}

    def start(self, ctx):
        if ctx.node != BASE:
            return
        for c in self.spt.children[BASE]:
            ctx.send(c, MK.CALCULATE_SUBTREE_SIZE)
        if not self.spt.children[BASE]:
            ctx.state["range"] = (0, 0)

    def _assign_children(self, ctx, first):
        st = ctx.state
        lo = first
        for c in self.spt.children[ctx.node]:
            hi = lo + st["sizes"][c] - 1
            ctx.send(c, MK.ASSIGN_ID, min_id=lo, max_id=hi)
            lo = hi + 1

    def on_message(self, ctx, msg):
        st = ctx.state
        node = ctx.node
        if msg.kind is MK.CALCULATE_SUBTREE_SIZE:
            kids = self.spt.children[node]
            if not kids:
                ctx.send(self.spt.parents[node][0], MK.SUBTREE_SIZE, size=1)
            for c in kids:
                ctx.send(c, MK.CALCULATE_SUBTREE_SIZE)
        elif msg.kind is MK.SUBTREE_SIZE:
            st["sizes"][msg.src] = msg.payload["size"]
            st["size"] += msg.payload["size"]
            if len(st["sizes"]) == st["expect"]:
                if node == BASE:
                    st["range"] = (0, st["size"])
                    self._assign_children(ctx, 1)
                else:
                    ctx.send(self.spt.parents[node][0], MK.SUBTREE_SIZE, size=st["size"])
        elif msg.kind is MK.ASSIGN_ID:
            st["id"] = msg.payload["min_id"]
            st["range"] = (msg.payload["min_id"], msg.payload["max_id"])
            self._assign_children(ctx, st["id"] + 1)
        else:
            raise ValueError(f"naming does not handle {msg.kind}")


def run_naming(spt: SpanningDag, graph, seed: int = 0, **kernel_options) -> NameTable:
    """Run the three-phase naming protocol on the kernel and collect the table."""
    if spt.kind is not DagKind.SPT:
        raise ValueError("naming runs on an SPT")
    kernel = Kernel(graph, seed=seed, **kernel_options)
    try:
        result = kernel.run(NamingProtocol(spt))
    except EventCapExceeded as exc:
        raise ProtocolStall(str(exc)) from exc
    states = result.states
    if any(s["id"] is None for s in states):
        raise ProtocolStall("naming finished without assigning every id")
    return NameTable(tuple(s["id"] for s in states), tuple(s["size"] for s in states),
                     tuple(s["range"] for s in states))


def naming_oracle(spt: SpanningDag) -> NameTable:
    """Centralized DFS preorder with ascending child order."""
    n = spt.num_nodes
    ids = [0] * n
    sizes = [0] * n
    counter = 0
    stack = [(BASE, False)]
    while stack:
        v, done = stack.pop()
        if done:
            sizes[v] = (0 if v == BASE else 1) + sum(sizes[c] for c in spt.children[v])
            continue
        if v != BASE:
            counter += 1
            ids[v] = counter
        stack.append((v, True))
        for c in reversed(spt.children[v]):
            stack.append((c, False))
    ranges = [(ids[v], ids[v] + sizes[v] - 1) for v in range(n)]
    ranges[BASE] = (0, sizes[BASE])
    return NameTable(tuple(ids), tuple(sizes), tuple(ranges))


def next_hop(table: NameTable, spt: SpanningDag, at: int, target_id: int) -> int:
    """Child whose interval holds ``target_id``, else the SPT parent."""
    for c in spt.children[at]:
        lo, hi = table.id_range[c]
        if lo <= target_id <= hi:
            return c
    if at == BASE:
        raise ValueError(f"id {target_id} is not in the table")
    return spt.parents[at][0]


def route_to(table: NameTable, spt: SpanningDag, src: int, target_id: int) -> list[int]:
    """Hop sequence from ``src`` to the node named ``target_id`` (``src`` excluded)."""
    if not 0 <= target_id <= spt.n:
        raise ValueError(f"id {target_id} outside [0, {spt.n}]")
    hops = []
    at = src
    while table.id[at] != target_id:
        at = next_hop(table, spt, at, target_id)
        hops.append(at)
    return hops
