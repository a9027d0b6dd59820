"""Deterministic simulator for dispersing mobile agents on anonymous port graphs."""

from .algorithms import RULES, get_rule, simple_dfs_rule, svl_rule, zombie_rule
from .core import (
    AgentState,
    Configuration,
    Mode,
    NodeContext,
    Placement,
    RunResult,
    initial_configuration,
    is_legitimate,
    make_ids,
    place,
    run,
    step,
)
from .monitor import lmin, standard_monitors, vlevel
from .portgraph import GraphSpec, PortGraph, from_edge_list, generate, m_prime, neighbor_via

__version__ = "0.1.0"

__all__ = [
    "RULES",
    "get_rule",
    "simple_dfs_rule",
    "svl_rule",
    "zombie_rule",
    "AgentState",
    "Configuration",
    "Mode",
    "NodeContext",
    "Placement",
    "RunResult",
    "initial_configuration",
    "is_legitimate",
    "make_ids",
    "place",
    "run",
    "step",
    "lmin",
    "standard_monitors",
    "vlevel",
    "GraphSpec",
    "PortGraph",
    "from_edge_list",
    "generate",
    "m_prime",
    "neighbor_via",
]
