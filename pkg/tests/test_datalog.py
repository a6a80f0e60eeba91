import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfgd.datalog import (GOAL, body_size, check_cfg, check_gn, check_stratification, format_program, naive_eval,
                          parse_program, stratify)
from cfgd.errors import NotStratifiableError, ParseError, ProgramError
from cfgd.oracle import gen_pn, gen_pn_instance, random_gn_program, random_tw_instance
from cfgd.relational import Fact, Instance, are_isomorphic, parse_instance
from cfgd.samples import reach_from_a, unreachable_pair


def test_example_program_shape():
    p = unreachable_pair()
    assert dict(p.intensional.relations) == {"T": 2, GOAL: 0}
    assert len(p.rules) == 3


def test_monotone_one_rule():
    p = parse_program("Goal() :- R(x,y).")
    assert len(p.rules) == 1 and p.is_positive


@pytest.mark.parametrize("text", [
    "Goal() :- not R(x,y).",          # negated extensional atom
    "T(x,y) :- R(x,z).",              # head variable missing from the body
    "Goal(x) :- R(x,y).",             # Goal must be 0-ary
])
def test_ill_formed_programs(text):
    with pytest.raises(ProgramError):
        parse_program(text)


def test_syntax_error():
    with pytest.raises(ParseError):
        parse_program("Goal() :- R(x,y)")


def test_strata_of_example():
    s = stratify(unreachable_pair())
    assert s["T"] < s[GOAL]


def test_self_negation_not_stratifiable():
    with pytest.raises(NotStratifiableError) as e:
        stratify(parse_program("Goal() :- A(x), not Goal()."))
    assert GOAL in str(e.value)


def test_positive_program_single_stratum():
    s = stratify(gen_pn(3))
    assert set(s.values()) == {1}


def test_body_sizes():
    assert body_size(reach_from_a()) == 6
    assert body_size(unreachable_pair()) == 4
    for i in (1, 2, 5):
        assert body_size(gen_pn(i)) == 6


def test_cfg_checks():
    rep = check_cfg(unreachable_pair())
    assert not rep.ok
    bad = [r for _, r, _, _ in rep.violations]
    assert str(bad[0]) == "T(x,y) :- R(x,z), T(z,y)."
    assert check_cfg(reach_from_a()).ok
    monadic = parse_program("P(x) :- R(x,y), A(y).\nP(y) :- P(x), R(x,y).\nGoal() :- P(x), B(x).")
    assert check_cfg(monadic).ok


def test_gn_checks():
    assert check_gn(reach_from_a()).ok
    p = parse_program("T(x,y) :- R(x,y).\nGoal() :- A(x), B(y), not T(x,y).")
    assert not check_gn(p).ok
    assert check_gn(gen_pn(2)).ok


def test_reports_every_violation():
    p = parse_program("P(x,y,z) :- A(x), B(y), A(z).\nGoal() :- P(x,y,z).")
    assert len(check_cfg(p).violations) == 3


def test_naive_eval_examples():
    r = naive_eval(unreachable_pair(), parse_instance("R(1,2)."))
    assert r.facts("T") == {("1", "2")}
    assert r.accepted
    assert not naive_eval(reach_from_a(), parse_instance("A(1). R(1,2). B(2).")).accepted
    assert naive_eval(reach_from_a(), parse_instance("A(1). B(2).")).accepted


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_pn_family(i):
    p = gen_pn(i)
    inst, _ = gen_pn_instance(i)
    assert len(p.rules) == i + 2
    assert naive_eval(p, inst).accepted
    for f in sorted(inst.facts):
        if f.relation == "R":
            assert not naive_eval(p, inst.without(f)).accepted


def test_format_round_trip():
    for p in (unreachable_pair(), reach_from_a(), gen_pn(2)):
        assert parse_program(format_program(p)) == p


@given(st.integers(0, 10**6))
def test_stratification_always_valid(seed):
    p = random_gn_program(seed)
    assert check_stratification(p, stratify(p))


@given(st.integers(0, 10**6))
def test_shifted_strata_same_result(seed):
    p = random_gn_program(seed)
    inst, _ = random_tw_instance(seed, size=6)
    s = stratify(p)
    # spreading strata apart keeps the conditions, and the semantics
    spread = {r: 3 * v + (1 if r == GOAL else 0) for r, v in s.items()}
    assert check_stratification(p, spread)
    assert naive_eval(p, inst, s).relations == naive_eval(p, inst, spread).relations


@given(st.integers(0, 10**6))
def test_isomorphism_invariance(seed):
    p = random_gn_program(seed)
    inst, _ = random_tw_instance(seed, size=6)
    other = inst.rename({e: "z" + e for e in inst.dom})
    assert are_isomorphic(inst, other)
    assert naive_eval(p, inst).accepted == naive_eval(p, other).accepted


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_positive_programs_are_monotone(seed, drop):
    p = gen_pn(2)
    inst, _ = gen_pn_instance(2)
    facts = sorted(inst.facts)
    sub = Instance([f for t, f in enumerate(facts) if (drop >> t) & 1], inst.signature)
    small, big = naive_eval(p, sub), naive_eval(p, inst)
    for rel, ts in small.relations.items():
        assert ts <= big.relations[rel]
