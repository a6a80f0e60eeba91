"""Running time is linear in the data for a fixed query, and a tiny program can need a big instance.

Run with ``python3 demos/04_scaling.py`` (about half a minute).
"""

import time

import numpy as np

from cfgd.engine import PipelineConfig, evaluate, evaluate_stats, evaluate_subinstances
from cfgd.oracle import gen_pn, gen_pn_instance
from cfgd.relational import Fact, Instance
from cfgd.samples import reach_from_a
from cfgd.treewidth import TreeDecomposition


def chain(n):
    c = [f"c{t}" for t in range(n + 1)]
    facts = [Fact("R", (c[t], c[t + 1])) for t in range(n)] + [Fact("A", (c[n // 2],)), Fact("B", (c[0],))]
    return Instance(facts), TreeDecomposition([(c[t], c[t + 1]) for t in range(n)], [t - 1 for t in range(n)])


# %% Chains of growing length with their path decomposition.
p = reach_from_a()
evaluate(p, *chain(10)[:1], PipelineConfig(decomposition=chain(10)[1]))  # compile first
ns, ts = [], []
for n in (2000, 4000, 8000, 16000, 32000):
    inst, td = chain(n)
    t0 = time.perf_counter()
    ok, stats = evaluate_stats(p, inst, PipelineConfig(decomposition=td))
    ns.append(n)
    ts.append(time.perf_counter() - t0)
    print(f"n={n:>6}  accept={ok}  gates={stats['gates']:>8}  {ts[-1]:.2f}s")
print("fitted exponent:", round(float(np.polyfit(np.log(ns), np.log(ts), 1)[0]), 3))

# %% The doubling family: a linear-size program, an exponential-size minimal model.
for i in range(1, 7):
    prog = gen_pn(i)
    inst, td = gen_pn_instance(i)
    cfg = PipelineConfig(decomposition=td)
    rs = [[f] for f in sorted(inst.facts) if f.relation == "R"]
    drops = evaluate_subinstances(prog, inst, rs, cfg)
    print(f"i={i}: {len(prog.rules)} rules, {len(inst)} facts, full={evaluate(prog, inst, cfg)}, "
          f"any single R-deletion accepted={any(drops)}")
