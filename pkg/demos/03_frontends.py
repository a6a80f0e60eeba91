"""Query languages that translate into guarded Datalog with small bodies.

Run with ``python3 demos/03_frontends.py``.
"""

from cfgd.datalog import format_program
from cfgd.engine import evaluate
from cfgd.frontends import cq, gnf, rpq
from cfgd.relational import parse_instance

inst = parse_instance("R(1,2). R(2,3). S(3,4). S(5,4). A(1).")

# %% An acyclic conjunctive query, via its join tree.
q = cq.parse_cq("R(x,y), R(y,z), S(z,w)")
prog, cert = cq.translate_cq(q, cq.gyo_join_tree(q))
print(cert.line())
print(format_program(prog))
print("pipeline:", evaluate(prog, inst), "| homomorphism search:", cq.cq_holds(q, inst), "\n")

# %% Two-way regular path queries keep body size 4 whatever the expression.
for regex in ("R.R.S", "R+.S.S-", "(R|S)*.S-.R"):
    prog = rpq.rpq_to_cfg(regex, {"R": 2, "S": 2})
    print(f"{regex:<14} rules={len(prog.rules):<3} pipeline={evaluate(prog, inst)!s:<5} "
          f"product NFA={rpq.rpq_holds(regex, inst)}")

# %% A strongly acyclic conjunction of path atoms.
sac = rpq.parse_sac2rpq("x y R+\ny z S\nw z S\n")
prog = rpq.sac2rpq_to_cfg(sac)
print("\nSAC2RPQ:", len(prog.rules), "rules;", evaluate(prog, inst), "vs oracle", rpq.sac2rpq_holds(sac, inst))

# %% Guarded negation: "some A-element has no R-successor in S".
text = "(exists (x) (and (A x) (nguarded (A x) (not (exists (y) (and (R x y) (S y y)))))))"
prog, cert = gnf.translate_gnf(text)
print("\n" + cert.line())
print(format_program(prog))
print("pipeline:", evaluate(prog, inst), "| direct evaluation:", gnf.gnf_holds(text, inst))
