"""Small worked examples shared by tests, demos and the CLI."""

from __future__ import annotations

from .datalog import Program, parse_program
from .relational import Instance, parse_instance
from .treewidth import TreeDecomposition

TABLE_INSTANCE = """\
R(3,7). R(3,4). R(5,4). R(2,5). R(9,10). R(7,8).
S(3,7). S(7,9). S(11,9). S(2,6).
T(1,2,3).
"""

# (bag, parent) pairs; the root holds the ternary fact
TABLE_DECOMPOSITION = [
    (("1", "2", "3"), -1),
    (("2", "3", "4"), 0),
    (("2", "4", "5"), 1),
    (("2", "6"), 0),
    (("3", "7"), 0),
    (("7", "8"), 4),
    (("7", "9"), 4),
    (("9", "10"), 6),
    (("9", "11"), 6),
]

# not CFG: the head pair (x, y) of the recursive rule never shares a body atom
UNREACHABLE_PAIR = """\
T(x,y) :- R(x,y).
T(x,y) :- R(x,z), T(z,y).
Goal :- not T(x,y).
"""

# CFG and GN, body size 3 x 2 = 6
REACH_FROM_A = """\
T(x) :- A(x).
T(y) :- T(x), R(x,y).
Goal :- A(x), B(y), not T(y).
"""


def table_instance() -> Instance:
    return parse_instance(TABLE_INSTANCE)


def table_decomposition() -> TreeDecomposition:
    bags, parent = zip(*TABLE_DECOMPOSITION)
    return TreeDecomposition(list(bags), list(parent))


def unreachable_pair() -> Program:
    return parse_program(UNREACHABLE_PAIR, {"R": 2})


def reach_from_a() -> Program:
    return parse_program(REACH_FROM_A, {"R": 2, "A": 1, "B": 1})
