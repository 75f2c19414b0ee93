"""Deterministic discrete-event message passing.

Distributed protocols are written as :class:`Protocol` subclasses whose
handlers run once per delivered message or fired timer, each with a
:class:`NodeContext` for the receiving node. Link delays are drawn from a
seeded RNG, every directed link is FIFO, and equal delivery times are ordered
by global send sequence, so a run is a pure function of
``(graph, protocol, seed, max_delay)``.
"""

from __future__ import annotations

import enum
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable

DEFAULT_MAX_DELAY = 5
DEFAULT_EVENT_CAP = 5_000_000


class MessageKind(str, enum.Enum):
    CALCULATE_SUBTREE_SIZE = "CALCULATE_SUBTREE_SIZE"
    SUBTREE_SIZE = "SUBTREE_SIZE"
    ASSIGN_ID = "ASSIGN_ID"
    LC = "LC"
    SF = "SF"
    SF_C = "SF_C"
    SF_S = "SF_S"
    ADD_SIBLING = "ADD_SIBLING"
    SF_ACK = "SF_ACK"
    RECALC = "RECALC"
    BFS = "BFS"


# multi-hop kinds: up to the base over SPT parents, or down by ID range
ROUTED_UP = frozenset({MessageKind.SF_C, MessageKind.SF_ACK})
ROUTED_DOWN = frozenset({MessageKind.SF_S})


class EventCapExceeded(RuntimeError):
    pass


class UndeliverableMessage(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    src: int
    dst: int
    payload: dict = field(default_factory=dict)


@dataclass(eq=False)
class TimerHandle:
    owner: int
    expiry: int
    purpose: str
    cancelled: bool = False


@dataclass
class TraceRecord:
    tick: int
    kind: str
    src: int
    dst: int
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "kind": self.kind, "src": self.src,
                           "dst": self.dst, "payload": _jsonable(self.payload)},
                          sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(_jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


class NodeContext:
    """What a handler sees: its own id, state and the send/timer primitives."""

    __slots__ = ("kernel", "node", "state")

    def __init__(self, kernel: Kernel, node: int, state: Any):
        self.kernel = kernel
        self.node = node
        self.state = state

    @property
    def now(self) -> int:
        return self.kernel.now

    def send(self, dst: int, kind: MessageKind, **payload) -> None:
        self.kernel.send(self.node, dst, kind, payload)

    def set_timer(self, delay: int, purpose: str) -> TimerHandle:
        return self.kernel.set_timer(self.node, delay, purpose)

    def cancel_timer(self, handle: TimerHandle) -> None:
        handle.cancelled = True


class Protocol:
    """Per-node handler set. Subclasses override what they need."""

    def init_state(self, node: int) -> Any:
        return {}

    def start(self, ctx: NodeContext) -> None:
        """Called once per node at tick 0, in ascending node order."""

    def on_message(self, ctx: NodeContext, msg: Message) -> None:
        raise NotImplementedError

    def on_timer(self, ctx: NodeContext, timer: TimerHandle) -> None:
        pass


@dataclass
class RunResult:
    states: list
    trace: list[TraceRecord]
    ticks: int
    events: int

    def dump_trace(self, fh) -> None:
        for rec in self.trace:
            fh.write(rec.to_json() + "\n")


_TIMER = 0
_DELIVERY = 1


class Kernel:
    def __init__(self, graph, seed: int = 0, max_delay: int = DEFAULT_MAX_DELAY,
                 event_cap: int = DEFAULT_EVENT_CAP,
                 up_route: Callable[[int], int] | None = None,
                 down_route: Callable[[int, int], int] | None = None,
                 record_trace: bool = True):
        if max_delay < 1:
            raise ValueError("max_delay must be >= 1")
        self.graph = graph
        self.max_delay = max_delay
        self.event_cap = event_cap
        self.up_route = up_route
        self.down_route = down_route
        self.record_trace = record_trace
        self.rng = random.Random(seed)
        self.now = 0
        self.events = 0
        self._seq = 0
        self._queue: list = []
        self._link_clock: dict[tuple[int, int], int] = {}
        self.trace: list[TraceRecord] = []
        self.contexts: list[NodeContext] = []

    def _push(self, when, kind, item):
        self._seq += 1
        heapq.heappush(self._queue, (when, self._seq, kind, item))

    def _hop(self, a: int, b: int, msg: Message) -> None:
        if b not in self.graph.adjacency[a]:
            raise UndeliverableMessage(f"{msg.kind.value} {a}->{b}: not neighbours")
        when = self.now + self.rng.randint(1, self.max_delay)
        link = (a, b)
        last = self._link_clock.get(link, 0)
        if when < last:
            when = last
        self._link_clock[link] = when
        self._push(when, _DELIVERY, (b, msg))

    def _next_hop(self, at: int, msg: Message) -> int:
        if msg.kind in ROUTED_UP:
            if self.up_route is None:
                raise UndeliverableMessage(f"{msg.kind.value}: no upward route configured")
            return self.up_route(at)
        if self.down_route is None:
            raise UndeliverableMessage(f"{msg.kind.value}: no downward route configured")
        return self.down_route(at, msg.dst)

    def send(self, src: int, dst: int, kind: MessageKind, payload: dict) -> None:
        msg = Message(MessageKind(kind), src, dst, payload)
        if msg.kind in ROUTED_UP or msg.kind in ROUTED_DOWN:
            if src == dst:
                self._push(self.now, _DELIVERY, (dst, msg))
            else:
                self._hop(src, self._next_hop(src, msg), msg)
        else:
            self._hop(src, dst, msg)

    def set_timer(self, owner: int, delay: int, purpose: str) -> TimerHandle:
        handle = TimerHandle(owner, self.now + max(0, int(delay)), purpose)
        self._push(handle.expiry, _TIMER, handle)
        return handle

    def run(self, protocol: Protocol) -> RunResult:
        nodes = range(self.graph.num_nodes)
        self.contexts = [NodeContext(self, v, protocol.init_state(v)) for v in nodes]
        for ctx in self.contexts:
            protocol.start(ctx)
        queue = self._queue
        while queue:
            when, _, kind, item = heapq.heappop(queue)
            self.now = when
            self.events += 1
            if self.events > self.event_cap:
                raise EventCapExceeded(f"more than {self.event_cap} events")
            if kind == _TIMER:
                if not item.cancelled:
                    item.cancelled = True
                    protocol.on_timer(self.contexts[item.owner], item)
                continue
            at, msg = item
            if at != msg.dst:
                self._hop(at, self._next_hop(at, msg), msg)
                continue
            if self.record_trace:
                self.trace.append(TraceRecord(when, msg.kind.value, msg.src, msg.dst, msg.payload))
            protocol.on_message(self.contexts[at], msg)
        return RunResult([c.state for c in self.contexts], self.trace, self.now, self.events)


def run(graph, protocol: Protocol, seed: int = 0, **options) -> RunResult:
    """Run ``protocol`` on ``graph`` until no message or timer is pending."""
    return Kernel(graph, seed=seed, **options).run(protocol)


class BfsFlood(Protocol):
    """Asynchronous Bellman-Ford relaxation that yields the maximal SPD.

    Each node keeps its best known hop count and every neighbour that
    announced one hop less; improvements are re-announced to all neighbours.
    """

    def init_state(self, node):
        return {"depth": 0 if node == 0 else None, "parents": set()}

    def start(self, ctx):
        if ctx.node == 0:
            for w in sorted(ctx.kernel.graph.adjacency[0]):
                ctx.send(w, MessageKind.BFS, depth=0)

    def on_message(self, ctx, msg):
        st = ctx.state
        cand = msg.payload["depth"] + 1
        if st["depth"] is None or cand < st["depth"]:
            st["depth"] = cand
            st["parents"] = {msg.src}
            for w in sorted(ctx.kernel.graph.adjacency[ctx.node]):
                ctx.send(w, MessageKind.BFS, depth=cand)
        elif cand == st["depth"]:
            st["parents"].add(msg.src)


def run_distributed_spd(graph, seed: int = 0, **options):
    """SPD built by message flooding on the kernel."""
    from kdag.graph import DagKind, SpanningDag

    result = run(graph, BfsFlood(), seed=seed, **options)
    depth = [s["depth"] for s in result.states]
    parents = [sorted(s["parents"]) for s in result.states]
    return SpanningDag.from_parents(parents, depth, DagKind.SPD), result
