"""End-to-end evaluation and provenance of CFG-Datalog programs.

decompose -> encode -> compile -> lift -> provenance cycluit -> evaluate

Under a provenance valuation, removed facts keep their elements: the active
domain is always that of the full instance.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cycluit import INP, OR, Cycluit, build_provenance, eval_many, eval_stratified
from .datalog import Program, check_cfg, check_gn, naive_eval
from .errors import NotCFGError, UnguardedNegationError
from .relational import Fact, Instance
from .satwa import compile as compile_program
from .satwa import lift
from .treewidth import TreeDecomposition, decompose_minfill, encode

log = logging.getLogger(__name__)


class ConformanceWarning(UserWarning):
    """The answer came from the reference evaluator instead of the automaton pipeline."""


@dataclass(frozen=True)
class PipelineConfig:
    treewidth: int | None = None
    decomposition: TreeDecomposition | None = None
    fallback: str = "naive"  # or "error"

    def __post_init__(self):
        if self.fallback not in ("naive", "error"):
            raise ValueError(f"fallback must be 'naive' or 'error', not {self.fallback!r}")
        if self.treewidth is not None and self.treewidth < 0:
            raise ValueError("treewidth must be >= 0")


@dataclass
class ProvenanceResult:
    cycluit: Cycluit
    fact_index: dict  # input gate -> Fact
    stats: dict = field(default_factory=dict)

    @property
    def gate_of(self) -> dict:
        return {f: g for g, f in self.fact_index.items()}

    def evaluate(self, present=None) -> bool:
        """Value under the valuation keeping exactly ``present`` (default: all facts)."""
        if present is None:
            return eval_stratified(self.cycluit, None)[0]
        gates = self.gate_of
        return eval_stratified(self.cycluit, [gates[f] for f in present])[0]

    def truth_table(self, order: list) -> np.ndarray:
        """Output over all 2^n subsets; bit j of the row index says whether ``order[j]`` is kept."""
        n = len(order)
        gates = self.gate_of
        rows = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
        return eval_many(self.cycluit, [gates[f] for f in order], rows)


def _guard_report(p: Program):
    rep = check_cfg(p)
    if not rep.ok:
        return NotCFGError(f"not a CFG program:\n{rep}")
    rep = check_gn(p)
    if not rep.ok:
        return UnguardedNegationError(f"negation is not guarded:\n{rep}")
    return None


def query_provenance(p: Program, instance: Instance, cfg: PipelineConfig | None = None) -> ProvenanceResult:
    """Provenance of ``p`` on ``instance`` as a stratified cycluit over its facts."""
    cfg = cfg or PipelineConfig()
    err = _guard_report(p)
    if err is not None:
        raise err
    t0 = time.perf_counter()
    td = cfg.decomposition if cfg.decomposition is not None else decompose_minfill(instance)
    t1 = time.perf_counter()
    enc = encode(instance, td, cfg.treewidth)
    t2 = time.perf_counter()
    a = compile_program(p, enc.k)
    c = build_provenance(lift(a), enc)
    t3 = time.perf_counter()
    res = _rename_inputs(c, enc, instance)
    stats = dict(c.stats.as_dict())
    stats.update(
        k=enc.k, facts=len(instance), decomposition_bags=len(td),
        time_decompose=t1 - t0, time_encode=t2 - t1, time_provenance=t3 - t2,
    )
    res.stats = stats
    return res


def _rename_inputs(c: Cycluit, enc, instance: Instance) -> ProvenanceResult:
    """Fact nodes' inputs become fact inputs; other inputs become constant-0 gates."""
    types = c.types.copy()
    strata = c.strata.astype(np.int32) + 1  # room for the 0-gates at stratum 1
    strata[types == INP] = 0
    fact_index: dict = {}
    for g, w in c.labels.items():
        f = enc.origin[w] if enc.origin is not None else None
        if f is None:
            types[g] = OR
            strata[g] = 1
        else:
            fact_index[g] = f
    missing = sorted(set(instance.facts) - set(fact_index.values()))
    indptr, indices = c.indptr, c.indices
    if missing:
        # facts the output does not depend on still get (unconnected) input gates
        extra = len(missing)
        types = np.concatenate([types, np.full(extra, INP, dtype=np.int8)])
        strata = np.concatenate([strata, np.zeros(extra, dtype=np.int32)])
        indptr = np.concatenate([indptr, np.full(extra, indptr[-1], dtype=np.int64)])
        for j, f in enumerate(missing):
            fact_index[len(c.types) + j] = f
    out = Cycluit(types, indptr, indices, c.output, dict(fact_index), strata)
    return ProvenanceResult(out, fact_index)


def evaluate(p: Program, instance: Instance, cfg: PipelineConfig | None = None) -> bool:
    """Does ``instance`` satisfy ``p``?"""
    cfg = cfg or PipelineConfig()
    err = _guard_report(p)
    if err is not None:
        if cfg.fallback == "error":
            raise err
        warnings.warn(
            f"{err}\nfalling back to the reference evaluator (no automaton is built for this program)",
            ConformanceWarning, stacklevel=2,
        )
        return naive_eval(p, instance).accepted
    return query_provenance(p, instance, cfg).evaluate()


def evaluate_subinstances(p: Program, instance: Instance, removals, cfg: PipelineConfig | None = None) -> list:
    """Acceptance on ``instance`` minus each fact set in ``removals``.

    One provenance cycluit is built for the full instance and every removal
    is answered as a valuation of it.  This is exact as long as a removal
    keeps the active domain; removals that shrink it are evaluated on their
    own.
    """
    removals = [frozenset(r) for r in removals]
    out: list = [None] * len(removals)
    batch = []
    for j, r in enumerate(removals):
        sub = instance.without(*r)
        if sub.dom != instance.dom:
            out[j] = evaluate(p, sub, cfg)
        else:
            batch.append(j)
    if batch:
        res = query_provenance(p, instance, cfg)
        order = sorted(instance.facts)
        pos = {f: i for i, f in enumerate(order)}
        rows = np.ones((len(batch), len(order)), dtype=np.uint8)
        for b, j in enumerate(batch):
            for f in removals[j]:
                if f in pos:
                    rows[b, pos[f]] = 0
        gates = res.gate_of
        vals = eval_many(res.cycluit, [gates[f] for f in order], rows)
        for b, j in enumerate(batch):
            out[j] = bool(vals[b])
    return out


def evaluate_stats(p: Program, instance: Instance, cfg: PipelineConfig | None = None):
    """Like ``evaluate`` but also returns the pipeline statistics."""
    t0 = time.perf_counter()
    res = query_provenance(p, instance, cfg)
    t1 = time.perf_counter()
    ok = res.evaluate()
    stats = dict(res.stats)
    stats["time_eval"] = time.perf_counter() - t1
    stats["time_total"] = time.perf_counter() - t0
    return ok, stats
