import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfgd.errors import ArityError, ParseError, SizeLimitError, UnknownRelationError
from cfgd.relational import Fact, Instance, Signature, are_isomorphic, format_instance, parse_instance
from cfgd.samples import table_instance

R2 = Signature({"R": 2})


def test_single_fact():
    i = parse_instance("R(1,2).", R2)
    assert len(i) == 1
    assert i.dom == {"1", "2"}


def test_table_instance_counts():
    i = table_instance()
    assert len(i) == 11
    assert len(i.dom) == 11


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse_instance("R(1).", R2)


def test_unknown_relation_under_explicit_signature():
    with pytest.raises(UnknownRelationError):
        parse_instance("S(1,2).", R2)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as e:
        parse_instance("R(1,2).\nR(1,,2).\n")
    assert e.value.line == 2


def test_comments_blanks_and_duplicates():
    i = parse_instance("% header\n\nR(a,b).  % trailing\nR(a,b).\n")
    assert len(i) == 1


def test_implicit_signature_fixes_arity():
    with pytest.raises(ArityError):
        parse_instance("R(1,2).\nR(1,2,3).\n")


def test_isomorphism_small_cases():
    a = parse_instance("R(1,2).")
    assert are_isomorphic(a, parse_instance("R(7,9)."))
    assert not are_isomorphic(a, parse_instance("R(1,1)."))


def test_shifted_table_is_isomorphic():
    i = table_instance()
    shifted = i.rename({e: str(int(e) + 100) for e in i.dom})
    assert are_isomorphic(i, shifted)
    assert are_isomorphic(shifted, i)


def test_isomorphism_size_guard():
    big = Instance([Fact("R", (str(t), str(t + 1))) for t in range(30)])
    with pytest.raises(SizeLimitError):
        are_isomorphic(big, big)


facts_st = st.sets(
    st.one_of(
        st.tuples(st.just("R"), st.tuples(st.sampled_from("abcde"), st.sampled_from("abcde"))),
        st.tuples(st.just("A"), st.tuples(st.sampled_from("abcde"))),
    ),
    max_size=8,
)


@given(facts_st)
def test_format_parse_round_trip(fs):
    i = Instance([Fact(r, a) for r, a in fs])
    j = parse_instance(format_instance(i))
    assert set(j.facts) == set(i.facts)


@given(facts_st, st.permutations("abcde"))
def test_isomorphic_under_renaming(fs, perm):
    i = Instance([Fact(r, a) for r, a in fs])
    j = i.rename(dict(zip("abcde", perm)))
    assert are_isomorphic(i, j) and are_isomorphic(j, i)
    assert len(i) == len(j) and len(i.dom) == len(j.dom)
