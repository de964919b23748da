"""Risk-aware recharging rendezvous scheduling for UAV/UGV teams."""

from .model import Edge, RendezvousInstance, Schedule, cost, is_feasible, weight

__version__ = "0.1.0"

__all__ = ["Edge", "RendezvousInstance", "Schedule", "cost", "weight", "is_feasible", "__version__"]
