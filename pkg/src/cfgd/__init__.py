"""Frontier-guarded Datalog over bounded-treewidth instances, via tree automata and cycluits."""

from .datalog import Program, make_program, naive_eval, parse_program, stratify
from .engine import ConformanceWarning, PipelineConfig, evaluate, query_provenance
from .relational import Fact, Instance, Signature, parse_instance
from .treewidth import TreeDecomposition, decompose_minfill, encode

__version__ = "0.1.0"

__all__ = [
    "ConformanceWarning", "Fact", "Instance", "PipelineConfig", "Program", "Signature",
    "TreeDecomposition", "decompose_minfill", "encode", "evaluate", "make_program",
    "naive_eval", "parse_instance", "parse_program", "query_provenance", "stratify",
]
