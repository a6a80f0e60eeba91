"""Provenance as a cyclic circuit: one input per fact, one output.

Run with ``python3 demos/02_provenance.py``.
"""

import numpy as np

from cfgd.cycluit import export_cycluit
from cfgd.engine import query_provenance
from cfgd.oracle import brute_provenance
from cfgd.relational import parse_instance
from cfgd.samples import reach_from_a

p = reach_from_a()
inst = parse_instance("A(1). R(1,2). R(2,3). B(3). B(4).")
res = query_provenance(p, inst)
c = res.cycluit
print(f"provenance cycluit: {len(c)} gates, {c.num_wires} wires, {len(c.input_gates)} inputs")

# %% The truth table over all 2^5 subinstances, from the circuit and from brute force.
order = sorted(inst.facts)
fast = res.truth_table(order)
slow = brute_provenance(p, inst, order).bits
print("tables agree:", np.array_equal(fast, slow))

print("\n" + " ".join(f"{str(f):>7}" for f in order) + "  Goal")
for r in range(0, 1 << len(order), 5):
    bits = [(r >> j) & 1 for j in range(len(order))]
    print(" ".join(f"{b:>7}" for b in bits) + f"  {fast[r]:>4}")

# %% Inputs carry their facts as labels, so the DOT rendering is readable.
c.labels = {g: str(f) for g, f in res.fact_index.items()}
dot = export_cycluit(c, "dot")
print("\nDOT export:", len(dot.splitlines()), "lines; first input gate line:")
print(next(line for line in dot.splitlines() if "shape=box" in line))
