"""Correctness tooling: exhaustive explorer, history oracle, stress driver."""

from .history import Event, History, Verdict, check_history
from .machine import ExploreConfig, ExploreResult, explore, frontier_of

__all__ = ["Event", "History", "Verdict", "check_history", "ExploreConfig",
           "ExploreResult", "explore", "frontier_of"]
