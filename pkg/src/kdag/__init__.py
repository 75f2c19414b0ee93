"""Lifetime-aware data-collection topologies (k-DAGs) for wireless sensor networks."""

from kdag.builder import BuildResult, SiblingEdge, build_kdag
from kdag.energy import EnergyModel, LifetimeResult, PolicyKind, RoutingPolicy, simulate_lifetime
from kdag.graph import (BASE, ConnectivityFailure, ConnectivityGraph, DagKind, SpanningDag,
                        build_spd, extract_spt, generate_instance, path_length_range)
from kdag.kernels import BACKEND
from kdag.load import LoadMap, balance_factor, compute_load_oracle, run_load_calc
from kdag.naming import NameTable, naming_oracle, route_to, run_naming

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BASE", "BuildResult", "ConnectivityFailure", "ConnectivityGraph", "DagKind",
    "EnergyModel", "LifetimeResult", "LoadMap", "NameTable", "PolicyKind", "RoutingPolicy",
    "SiblingEdge", "SpanningDag", "balance_factor", "build_kdag", "build_spd",
    "compute_load_oracle", "extract_spt", "generate_instance", "naming_oracle",
    "path_length_range", "route_to", "run_load_calc", "run_naming", "simulate_lifetime",
]
