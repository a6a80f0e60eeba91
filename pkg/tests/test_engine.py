import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfgd.cycluit import INP, export_cycluit, stratify_cycluit, check_stratification
from cfgd.datalog import naive_eval, parse_program
from cfgd.engine import (ConformanceWarning, PipelineConfig, evaluate, evaluate_stats, evaluate_subinstances,
                         query_provenance)
from cfgd.errors import NotCFGError, WidthExceededError
from cfgd.frontends.rpq import rpq_to_cfg
from cfgd.oracle import brute_provenance, gen_pn, gen_pn_instance, random_gn_program, random_tw_instance
from cfgd.relational import Instance, parse_instance
from cfgd.samples import reach_from_a, unreachable_pair


def test_or_provenance():
    p = parse_program("Goal() :- R(x,y).")
    inst = parse_instance("R(1,2). R(3,4).")
    res = query_provenance(p, inst)
    order = sorted(inst.facts)
    assert res.truth_table(order).tolist() == [0, 1, 1, 1]
    assert sorted(res.fact_index.values()) == order
    assert set(res.cycluit.input_gates.tolist()) == set(res.fact_index)


def test_reach_from_a_provenance():
    inst = parse_instance("A(1). R(1,2). B(3).")
    res = query_provenance(reach_from_a(), inst)
    order = sorted(inst.facts)
    assert np.array_equal(res.truth_table(order), brute_provenance(reach_from_a(), inst, order).bits)


def test_empty_instance():
    p = parse_program("Goal() :- R(x,y).")
    empty = Instance([], p.extensional)
    assert evaluate(p, empty) == naive_eval(p, empty).accepted is False


def test_fallback_policy():
    p = unreachable_pair()
    inst = parse_instance("R(1,2).")
    with pytest.warns(ConformanceWarning):
        assert evaluate(p, inst) == naive_eval(p, inst).accepted
    with pytest.raises(NotCFGError):
        evaluate(p, inst, PipelineConfig(fallback="error"))


def test_bad_config():
    with pytest.raises(ValueError):
        PipelineConfig(fallback="maybe")


def test_width_override_too_small():
    inst = parse_instance("T(1,2,3).")
    with pytest.raises(WidthExceededError):
        query_provenance(parse_program("Goal() :- T(x,y,z)."), inst, PipelineConfig(treewidth=1))


def test_rpq_through_pipeline():
    assert evaluate(rpq_to_cfg("R·S⁻", {"R": 2, "S": 2}), parse_instance("R(1,2). S(3,2)."))


@pytest.mark.parametrize("i", [1, 2, 3])
def test_pn_family(i):
    p = gen_pn(i)
    inst, td = gen_pn_instance(i)
    cfg = PipelineConfig(decomposition=td)
    assert evaluate(p, inst, cfg)
    rs = [f for f in sorted(inst.facts) if f.relation == "R"]
    batched = evaluate_subinstances(p, inst, [[f] for f in rs], cfg)
    direct = [evaluate(p, inst.without(f), cfg) for f in rs]
    assert batched == direct == [False] * len(rs)


def test_subinstances_shrinking_domain():
    p = parse_program("Goal() :- A(x).")
    inst = parse_instance("A(1). R(2,3).")
    got = evaluate_subinstances(p, inst, [[], [next(f for f in inst.facts if f.relation == "A")]])
    assert got == [True, False]


def test_stats():
    ok, stats = evaluate_stats(reach_from_a(), parse_instance("A(1). R(1,2). B(3)."))
    assert ok
    for key in ("gates", "states", "tree_nodes", "time_total"):
        assert key in stats


def test_deterministic_export():
    inst = parse_instance("A(1). R(1,2). R(2,3). B(3).")
    a = export_cycluit(query_provenance(reach_from_a(), inst).cycluit)
    b = export_cycluit(query_provenance(reach_from_a(), inst).cycluit)
    assert a == b


@given(st.integers(0, 10**6))
def test_pipeline_equals_naive(seed):
    p = random_gn_program(seed)
    inst, td = random_tw_instance(seed, width=2, size=10)
    want = naive_eval(p, inst).accepted
    assert evaluate(p, inst) == want
    assert evaluate(p, inst, PipelineConfig(decomposition=td)) == want


@given(st.integers(0, 10**6))
def test_provenance_exhaustive(seed):
    p = random_gn_program(seed)
    inst, td = random_tw_instance(seed, width=2, size=7)
    res = query_provenance(p, inst, PipelineConfig(decomposition=td))
    c = res.cycluit
    assert check_stratification(c, stratify_cycluit(c))
    order = sorted(inst.facts)
    tt = brute_provenance(p, inst, order)
    assert np.array_equal(res.truth_table(order), tt.bits)
    assert res.evaluate() == bool(tt.bits[-1])
