"""Distributed drift-plus-penalty control for multihop sensor networks
powered by energy harvesting, the electricity grid, or both, with a
discrete-time simulator and runtime bound audits."""

from .model import (BoundConstants, Link, Network, Node, Params, Session,
                    TopologyConfig, TopologyError, bound_constants,
                    build_topology, validate_network)
from .queues import Decision, QueueState
from .sim import RunMetrics, run, sweep_V
from .stochastic import SlotState, sample_slot, state_at

__all__ = [
    "BoundConstants", "Decision", "Link", "Network", "Node", "Params",
    "QueueState", "RunMetrics", "Session", "SlotState", "TopologyConfig",
    "TopologyError", "bound_constants", "build_topology", "run",
    "sample_slot", "state_at", "sweep_V", "validate_network",
]

__version__ = "0.1.0"
