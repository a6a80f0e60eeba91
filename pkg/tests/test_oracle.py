import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfgd.datalog import body_size, check_cfg, check_gn, naive_eval, parse_program, stratify
from cfgd.errors import SizeLimitError
from cfgd.oracle import (brute_provenance, gen_pn, gen_pn_instance, random_gn_program, random_tw_instance,
                         TruthTable)
from cfgd.relational import Fact, Instance, parse_instance
from cfgd.samples import reach_from_a
from cfgd.treewidth import validate_decomposition


def test_single_fact_table():
    tt = brute_provenance(parse_program("Goal() :- R(x,y)."), parse_instance("R(1,2)."))
    assert tt.bits.tolist() == [0, 1]


def test_or_table():
    tt = brute_provenance(parse_program("Goal() :- R(x,y)."), parse_instance("R(1,2). R(3,4)."))
    assert tt.bits.tolist() == [0, 1, 1, 1]


def test_reach_from_a_table():
    inst = parse_instance("A(1). R(1,2). B(3).")
    tt = brute_provenance(reach_from_a(), inst)
    order = tt.order
    # accepted iff A(1) and B(3) are kept (3 is never reachable)
    for r, b in enumerate(tt.bits.tolist()):
        kept = {order[j] for j in range(3) if r >> j & 1}
        assert b == int(Fact("A", ("1",)) in kept and Fact("B", ("3",)) in kept)


def test_table_csv_and_row():
    inst = parse_instance("R(1,2). R(3,4).")
    tt = brute_provenance(parse_program("Goal() :- R(x,y)."), inst)
    lines = tt.to_csv().splitlines()
    assert lines[0] == "R(1,2),R(3,4),accept"
    assert len(lines) == 5
    assert tt.row([Fact("R", ("3", "4"))]) == 1 and tt.row([]) == 0


def test_table_size_cap():
    big = Instance([Fact("A", (str(t),)) for t in range(21)])
    with pytest.raises(SizeLimitError):
        brute_provenance(parse_program("Goal() :- A(x)."), big)


def test_pn_rule_counts():
    assert len(gen_pn(1).rules) == 3
    assert len(gen_pn(3).rules) == 5
    for i in range(1, 7):
        p = gen_pn(i)
        assert check_cfg(p).ok and body_size(p) == 6


@pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
def test_pn_instance(i):
    inst, td = gen_pn_instance(i)
    assert sum(f.relation == "R" for f in inst.facts) == 2 ** i
    assert validate_decomposition(inst, td) == 2
    assert naive_eval(gen_pn(i), inst).accepted


def test_pn_limits():
    with pytest.raises(ValueError):
        gen_pn(0)
    with pytest.raises(SizeLimitError):
        gen_pn_instance(17)


def test_full_row_is_naive_eval():
    p = reach_from_a()
    inst = parse_instance("A(1). R(1,2). R(2,3). B(4).")
    tt = brute_provenance(p, inst)
    assert tt.bits[-1] == naive_eval(p, inst).accepted


@given(st.integers(0, 10**6), st.sampled_from([4, 6, 8]))
def test_generated_programs_pass_checks(seed, cap):
    p = random_gn_program(seed, cap)
    assert check_cfg(p).ok and check_gn(p).ok
    assert body_size(p) <= cap
    stratify(p)


@given(st.integers(0, 10**6), st.integers(0, 3), st.integers(1, 12))
def test_generated_instances_valid(seed, width, size):
    inst, td = random_tw_instance(seed, width, size)
    assert validate_decomposition(inst, td) <= width
    assert len(inst) <= size


@given(st.integers(0, 10**6))
def test_generators_deterministic(seed):
    assert random_gn_program(seed) == random_gn_program(seed)
    a, ta = random_tw_instance(seed)
    b, tb = random_tw_instance(seed)
    assert a == b and ta.bags == tb.bags
