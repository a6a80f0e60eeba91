import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfgd.datalog import GOAL, body_size, check_cfg, is_recursive, naive_eval, stratify
from cfgd.errors import NotAlphaAcyclicError, NotNormalFormError, NotSimplicialError, NotStronglyAcyclicError, ProgramError
from cfgd.frontends import cq, gnf, rpq
from cfgd.oracle import PATH_SIGNATURE, random_acyclic_cq, random_cq_instance, random_gnf, random_regex
from cfgd.relational import Fact, Instance, Signature, parse_instance
from cfgd.treewidth import TreeDecomposition, check_simplicial, validate_decomposition


def random_instance(rng, sig, n_elems=6, n_facts=8):
    facts = set()
    rels = sorted(sig.relations.items())
    for _ in range(n_facts):
        nm, ar = rng.choice(rels)
        facts.add(Fact(nm, tuple(str(rng.randrange(n_elems)) for _ in range(ar))))
    return Instance(facts, sig)


# -- conjunctive queries ----------------------------------------------------


def test_parse_cq_forms():
    for text in ("R(x,y), S(y,z)", "Goal :- R(x,y) ∧ S(y,z).", "R(x,y) & S(y,z)"):
        q = cq.parse_cq(text)
        assert [a.relation for a in q.atoms] == ["R", "S"]


def test_join_tree_path():
    q = cq.parse_cq("R(x,y), S(y,z)")
    t = cq.gyo_join_tree(q)
    assert len(t) == 2 and t.width == 1
    assert check_simplicial(q.primal_graph(), t)


def test_triangle_is_cyclic():
    with pytest.raises(NotAlphaAcyclicError):
        cq.gyo_join_tree(cq.parse_cq("R(x,y), R(y,z), R(z,x)"))


def test_single_atom_join_tree():
    t = cq.gyo_join_tree(cq.parse_cq("T(x,y,z)"))
    assert len(t) == 1 and t.width == 2


def test_bound_degree_chains_same_interface():
    t = TreeDecomposition([("x", "y"), ("x", "a"), ("x", "b"), ("x", "c")], [-1, 0, 0, 0])
    b = cq.bound_degree(t)
    assert cq.max_degree(b) <= 2
    chain = [i for i, bag in enumerate(b.bags) if set(bag) == {"x"}]
    assert len(chain) == 3


def test_bound_degree_star():
    k = 1
    n = 2 ** (k + 1) + 1
    bags = [("x", "y")] + [("x", f"z{i}") for i in range(n)]
    t = TreeDecomposition(bags, [-1] + [0] * n)
    b = cq.bound_degree(t)
    assert cq.max_degree(b) <= 2 ** (k + 1)
    assert b.width == t.width


def test_binary_tree_kept():
    t = TreeDecomposition([("x", "y"), ("y", "z"), ("x", "w")], [-1, 0, 0])
    b = cq.bound_degree(t)
    assert cq.max_degree(b) <= 2 and b.width == 1


def test_path_query_translation():
    q = cq.parse_cq("R(x,y), S(y,z)")
    p, cert = cq.translate_cq(q, cq.gyo_join_tree(q))
    assert check_cfg(p).ok and p.is_positive and not is_recursive(p)
    assert cert.body_size <= cert.bound == 12
    rng = random.Random(0)
    for _ in range(200):
        inst = random_instance(rng, q.signature)
        assert naive_eval(p, inst).accepted == cq.cq_holds(q, inst)


def test_single_atom_translation():
    q = cq.parse_cq("R(x,y)")
    p = cq.cq_to_cfg(q, cq.gyo_join_tree(q))
    assert naive_eval(p, parse_instance("R(1,2).")).accepted
    assert any(r.head.relation == GOAL for r in p.rules)


def test_triangle_with_single_bag():
    q = cq.parse_cq("R(x,y), R(y,z), R(z,x)")
    p = cq.cq_to_cfg(q, TreeDecomposition([("x", "y", "z")], [-1]))
    rules_with_atoms = [r for r in p.rules if sum(l.atom.relation == "R" for l in r.body) == 3]
    assert len(rules_with_atoms) == 1
    rng = random.Random(1)
    for _ in range(200):
        inst = random_instance(rng, q.signature, n_elems=4)
        assert naive_eval(p, inst).accepted == cq.cq_holds(q, inst)


def test_non_simplicial_rejected():
    q = cq.parse_cq("R(x1,x2), R(x2,x3), R(x3,x4), R(x4,x1)")
    td = TreeDecomposition([("x1", "x2", "x3"), ("x1", "x3", "x4")], [-1, 0])
    with pytest.raises(NotSimplicialError):
        cq.cq_to_cfg(q, td)


@given(st.integers(0, 10**6))
def test_random_acyclic_cq(seed):
    q = random_acyclic_cq(seed)
    t = cq.gyo_join_tree(q)
    assert check_simplicial(q.primal_graph(), t)
    p, cert = cq.translate_cq(q, t)
    assert check_cfg(p).ok and not is_recursive(p)
    assert cert.body_size <= cert.bound
    inst = random_cq_instance(q, seed)
    assert naive_eval(p, inst).accepted == cq.cq_holds(q, inst)


# -- regular path queries ---------------------------------------------------


def words(letters, n):
    for m in range(n + 1):
        yield from itertools.product(letters, repeat=m)


def test_thompson_sizes():
    assert rpq.thompson(rpq.parse_regex("R")).num_states == 2
    nfa = rpq.thompson(rpq.parse_regex("R·S⁻"))
    assert nfa.num_states == 4
    letters = [("R", False), ("R", True), ("S", False), ("S", True)]
    for w in words(letters, 4):
        assert nfa.accepts(w) == (list(w) == [("R", False), ("S", True)])
    assert rpq.thompson(rpq.parse_regex("(R|S)*")).accepts(())


@given(st.integers(0, 10**6))
def test_thompson_language(seed):
    r = rpq.parse_regex(random_regex(seed, depth=3))
    nfa = rpq.thompson(r)
    letters = [("R", False), ("R", True), ("S", False)]
    for w in words(letters, 4):
        assert nfa.accepts(w) == rpq.regex_matches(r, w)


def test_reverse_language():
    r = rpq.parse_regex("R.S-.S")
    rev = rpq.thompson(r).reverse()
    # read backwards, each edge is traversed the other way
    assert rev.accepts([("S", True), ("S", False), ("R", True)])
    assert not rev.accepts([("R", False), ("S", True), ("S", False)])


@pytest.mark.parametrize("regex,facts,want", [
    ("R", "R(1,2).", True),
    ("R.R", "R(1,2).", False),
    ("R·S⁻", "R(1,2). S(3,2).", True),
])
def test_rpq_examples(regex, facts, want):
    inst = parse_instance(facts)
    p = rpq.rpq_to_cfg(regex, {"R": 2, "S": 2})
    assert body_size(p) <= 4
    assert naive_eval(p, inst).accepted is want
    assert rpq.rpq_holds(regex, inst) is want


def test_rpq_needs_binary_signature():
    with pytest.raises(ProgramError):
        rpq.rpq_to_cfg("R", {"R": 3})


@given(st.integers(0, 10**6))
def test_rpq_random(seed):
    rng = random.Random(seed)
    r = random_regex(seed)
    p = rpq.rpq_to_cfg(r, PATH_SIGNATURE)
    assert check_cfg(p).ok and body_size(p) <= 4
    inst = random_instance(rng, PATH_SIGNATURE, n_elems=6, n_facts=7)
    assert naive_eval(p, inst).accepted == rpq.rpq_holds(r, inst)


def test_sac_single_edge_matches_rpq():
    inst = parse_instance("R(1,2). S(3,2).")
    q = rpq.SAC2RPQ([("x", "y", "R.S-")])
    p = rpq.sac2rpq_to_cfg(q, PATH_SIGNATURE)
    assert naive_eval(p, inst).accepted == naive_eval(rpq.rpq_to_cfg("R.S-", PATH_SIGNATURE), inst).accepted


def test_sac_path_and_components():
    q = rpq.parse_sac2rpq("x y R\ny z S\n")
    p = rpq.sac2rpq_to_cfg(q)
    assert body_size(p) <= 4 and check_cfg(p).ok
    assert naive_eval(p, parse_instance("R(1,2). S(2,3).")).accepted
    assert not naive_eval(p, parse_instance("R(1,2). S(3,4).")).accepted
    two = rpq.parse_sac2rpq("x y R\nu v S\n")
    p2 = rpq.sac2rpq_to_cfg(two)
    assert not naive_eval(p2, parse_instance("R(1,2). R(2,3).")).accepted
    assert naive_eval(p2, parse_instance("R(1,2). S(5,6).")).accepted


@pytest.mark.parametrize("text", ["x x R", "x y R\ny x S", "x y R\ny z S\nz x R"])
def test_not_strongly_acyclic(text):
    with pytest.raises(NotStronglyAcyclicError):
        rpq.sac2rpq_to_cfg(rpq.parse_sac2rpq(text))


@given(st.integers(0, 10**6))
def test_sac_random(seed):
    rng = random.Random(seed)
    nv = rng.randint(2, 4)
    edges = []
    for v in range(1, nv):
        u = rng.randrange(v)
        z, z2 = (f"v{u}", f"v{v}") if rng.random() < 0.5 else (f"v{v}", f"v{u}")
        edges.append((z, z2, random_regex(rng.randrange(10**6), depth=2)))
    q = rpq.SAC2RPQ(edges)
    p = rpq.sac2rpq_to_cfg(q, PATH_SIGNATURE)
    assert body_size(p) <= 4 and check_cfg(p).ok
    inst = random_instance(rng, PATH_SIGNATURE, n_elems=5, n_facts=7)
    assert naive_eval(p, inst).accepted == rpq.sac2rpq_holds(q, inst)


# -- guarded-negation formulas ----------------------------------------------


def test_gnf_single_atom():
    p = gnf.gnf_to_cfg("(exists (x y) (R x y))")
    assert len(p.rules) == 1
    (r,) = p.rules
    assert r.head.relation == GOAL and [l.atom.relation for l in r.body] == ["R"]


def test_gnf_negation_example():
    text = "(exists (x) (and (A x) (nguarded (A x) (not (exists (y) (and (R x y) (A x)))))))"
    p, cert = gnf.translate_gnf(text)
    assert len(set(stratify(p).values())) == 2
    assert cert.body_size <= cert.bound
    rng = random.Random(2)
    for _ in range(200):
        inst = random_instance(rng, Signature({"A": 1, "R": 2}), n_elems=6, n_facts=6)
        assert naive_eval(p, inst).accepted == gnf.gnf_holds(text, inst)


def test_gnf_disjunction_gives_two_rules():
    p = gnf.gnf_to_cfg("(or (exists (x) (guarded (A x) (S x x))) (exists (x y) (guarded (R x y) (S y x))))")
    goal_rules = [r for r in p.rules if r.head.relation == GOAL]
    assert len(goal_rules) == 2


@pytest.mark.parametrize("text", [
    "(R x y)",                                            # free variables
    "(exists (x y) (not (R x y)))",                       # bare negation
    "(exists (x y) (guarded (A x) (R x y)))",             # guard misses y
    "(exists (x) (nguarded (A x) (R x x)))",              # nguarded without not
])
def test_not_normal_form(text):
    with pytest.raises(NotNormalFormError):
        gnf.parse_gnf(text)


@given(st.integers(0, 10**6))
def test_gnf_random(seed):
    text = random_gnf(seed)
    p, cert = gnf.translate_gnf(text)
    assert check_cfg(p).ok and not is_recursive(p)
    assert cert.body_size <= cert.bound
    rng = random.Random(seed)
    inst = random_instance(rng, Signature({"A": 1, "R": 2, "S": 2}), n_elems=5)
    assert naive_eval(p, inst).accepted == gnf.gnf_holds(text, inst)
