"""Adversarial packet injection on single-sink trees: simulator, policies and checkers."""
from .adversary import BurstinessBound, InjectionTrace, Violation, audit, audit_exhaustive
from .engine import Execution, ExecutionTrace, simulate
from .policies import FIE, Greedy, LocalDownhill, LocalFIE, get_policy
from .topology import TreeNetwork, build_line, build_star, build_tree, random_tree

__all__ = [
    "BurstinessBound", "InjectionTrace", "Violation", "audit", "audit_exhaustive",
    "Execution", "ExecutionTrace", "simulate",
    "FIE", "Greedy", "LocalDownhill", "LocalFIE", "get_policy",
    "TreeNetwork", "build_line", "build_star", "build_tree", "random_tree",
]
