"""Robber Locating game on graph subdivisions: solvers, strategies and verification."""

from robloc.errors import (
    GraphError,
    IllegalMove,
    ProtocolViolation,
    ResourceLimit,
    RobLocError,
    StrategyError,
)
from robloc.graph import (
    Graph,
    Matching,
    SubdividedGraph,
    greedy_maximal_matching,
    min_maximal_matching,
    parse_graph_text,
    subdivide,
)

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "GraphError",
    "IllegalMove",
    "Matching",
    "ProtocolViolation",
    "ResourceLimit",
    "RobLocError",
    "StrategyError",
    "SubdividedGraph",
    "greedy_maximal_matching",
    "min_maximal_matching",
    "parse_graph_text",
    "subdivide",
]
