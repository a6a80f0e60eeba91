"""A tour of the pipeline on the eleven-fact example instance.

Run with ``python3 demos/01_worked_example.py``.
"""

from cfgd.datalog import body_size, check_cfg, check_gn, format_program, stratify
from cfgd.engine import evaluate
from cfgd.relational import are_isomorphic, parse_instance
from cfgd.samples import TABLE_INSTANCE, reach_from_a, table_decomposition, unreachable_pair
from cfgd.treewidth import decode, decompose_minfill, encode, validate_decomposition

# %% The instance: three relations, eleven facts, eleven elements.
inst = parse_instance(TABLE_INSTANCE)
print(f"{len(inst)} facts over {len(inst.dom)} elements")
for rel, tuples in sorted(inst.by_relation().items()):
    print(f"  {rel}: {sorted(tuples)}")

# %% A width-2 decomposition, checked, and the min-fill heuristic for comparison.
td = table_decomposition()
print("given decomposition has width", validate_decomposition(inst, td))
mf = decompose_minfill(inst)
print("min-fill finds width", validate_decomposition(inst, mf), "with", len(mf), "bags")

# %% Tree encodings use only 2k+2 = 6 element names; decoding gives back the instance.
enc = encode(inst, td, 2)
print(f"encoding: {len(enc)} nodes, {sum(f is not None for f in enc.facts)} carry a fact")
print("decode(encode(I)) isomorphic to I:", are_isomorphic(decode(enc), inst))

# %% Two programs.  The transitive-closure one is not frontier-guarded ...
p = unreachable_pair()
print("\n" + format_program(p))
print("CFG check:", check_cfg(p))

# ... while the reachability-from-A one is, with body size 3 x 2.
q = reach_from_a()
print("\n" + format_program(q))
print("CFG:", check_cfg(q), "| GN:", check_gn(q), "| body size:", body_size(q), "| strata:", stratify(q))

# %% Evaluation through the automaton pipeline.
for text in ("A(1). R(1,2). B(3).", "A(1). R(1,2). B(2)."):
    print(f"{text:<22} ->", "accept" if evaluate(q, parse_instance(text)) else "reject")
