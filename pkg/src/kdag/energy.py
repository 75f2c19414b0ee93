"""Data routing over a fixed DAG, energy accounting and network lifetime.

One simulation round is one hour: every sensor emits ``rate`` bits, bits move
child -> parent under the chosen policy, receivers pay ``e_rx`` per bit and
senders ``e_tx`` per bit. The base station never pays. Lifetime is the number
of rounds completed before some sensor cannot afford the next one.

Policies:

* ``EVEN_SPLIT``: bits are split evenly across all parents (fluid).
* ``MPE``: each node sends all its bits to the parent whose best path to the
  base has the largest minimum residual energy (ties: smallest id). Path
  metrics are refreshed every ``period`` rounds.
* ``PE``: bits are split across parents in proportion to their residual
  energy (fluid).

MPE is max-min path-energy routing; PE is its proportional (fluid) cousin.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

from kdag import kernels
from kdag.graph import BASE, SpanningDag
from kdag.load import LoadMap, compute_load_oracle

# relative slack on the energy budget, far below one round's cost
ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class EnergyModel:
    e_rx: float = 50e-9
    e_tx: float = 250e-9
    rate: float = 40.0
    e_init: float = 0.05

    def __post_init__(self):
        for name in ("e_rx", "e_tx", "rate", "e_init"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


class PolicyKind(str, enum.Enum):
    EVEN_SPLIT = "even"
    MPE = "mpe"
    PE = "pe"


_POLICY_CODE = {
    PolicyKind.EVEN_SPLIT: kernels.POLICY_EVEN,
    PolicyKind.MPE: kernels.POLICY_MPE,
    PolicyKind.PE: kernels.POLICY_PE,
}


@dataclass(frozen=True)
class RoutingPolicy:
    kind: PolicyKind = PolicyKind.MPE
    period: int = 1

    @classmethod
    def parse(cls, value) -> RoutingPolicy:
        if isinstance(value, RoutingPolicy):
            return value
        return cls(PolicyKind(str(value).lower()))


@dataclass
class EnergyState:
    residual: list[float]
    dead: list[bool]


@dataclass
class LifetimeResult:
    lifetime_hours: int
    lifetime_flow: float
    bottleneck_node: int
    policy: str
    dag_kind: str
    theta: float
    energy: EnergyState

    def to_dict(self) -> dict:
        return {"lifetime_hours": self.lifetime_hours, "lifetime_flow": self.lifetime_flow,
                "bottleneck_node": self.bottleneck_node, "policy": self.policy,
                "dag_kind": self.dag_kind, "theta": self.theta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def round_cap(model: EnergyModel) -> int:
    # every sensor pays at least rate * e_tx per round
    return int(model.e_init / (model.rate * model.e_tx) * (1 + ENERGY_TOL)) + 1


def run_rounds(dag: SpanningDag, model: EnergyModel, policy: RoutingPolicy,
               max_rounds: int | None = None, backend=None):
    """Raw kernel call: ``(rounds, residual, bottleneck)``."""
    kern = kernels if backend is None else backend
    cap = round_cap(model) if max_rounds is None else max_rounds
    return kern.simulate(dag.parents, dag.order, _POLICY_CODE[policy.kind], model.e_rx,
                         model.e_tx, model.rate, model.e_init, policy.period, cap,
                         model.e_init * ENERGY_TOL)


def simulate_lifetime(dag: SpanningDag, model: EnergyModel | None = None,
                      policy: RoutingPolicy | str = RoutingPolicy(),
                      loads: LoadMap | None = None, backend=None) -> LifetimeResult:
    model = model or EnergyModel()
    policy = RoutingPolicy.parse(policy)
    loads = loads or compute_load_oracle(dag)
    rounds, residual, worst = run_rounds(dag, model, policy, backend=backend)
    residual[BASE] = math.inf
    dead = [False] * len(residual)
    if worst >= 0:
        dead[worst] = True
    return LifetimeResult(rounds, flow_lifetime(dag, model, loads), worst,
                          policy.kind.value, dag.kind.value, loads.theta(),
                          EnergyState(residual, dead))


def node_power(model: EnergyModel, load: float) -> float:
    """Joules per round for a node relaying ``load`` units (own unit included)."""
    return model.rate * (model.e_rx * (load - 1.0) + model.e_tx * load)


def flow_lifetime(dag: SpanningDag, model: EnergyModel, loads: LoadMap) -> float:
    """Closed-form lifetime (hours) under the even-split fluid flow."""
    return min(model.e_init / node_power(model, loads.load[v]) for v in range(1, dag.num_nodes))


def flow_bottleneck(dag: SpanningDag, model: EnergyModel, loads: LoadMap) -> int:
    return min(range(1, dag.num_nodes), key=lambda v: (-loads.load[v], v))


def mpe_choices(dag: SpanningDag, residual) -> list[int]:
    """Parent each node would pick under MPE given ``residual`` energies."""
    metric = [0.0] * dag.num_nodes
    metric[BASE] = math.inf
    choice = [-1] * dag.num_nodes
    for v in dag.order[1:]:
        best = max(dag.parents[v], key=lambda p: (metric[p], -p))
        choice[v] = best
        metric[v] = min(residual[v], metric[best])
    return choice
