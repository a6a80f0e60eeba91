"""Boolean conjunctive queries: join trees, degree bounding and translation to CFG-Datalog.

The translation follows the classical one for bounded simplicial width: one
intensional predicate per non-root bag, whose arguments are the interface with
the parent, and whose rule conjoins the atoms placed at that bag, a clique guard
for the interface (atoms copied with fresh variables) and the predicates of the
children.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..datalog import GOAL, Atom, Literal, Program, Rule, body_size, make_program
from ..errors import NotAlphaAcyclicError, NotSimplicialError, ParseError
from ..relational import Fact, Instance, Signature
from ..treewidth import TreeDecomposition, check_simplicial, primal_of_atoms, validate_decomposition


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A Boolean CQ: every variable is existentially quantified."""

    atoms: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.atoms:
            raise ValueError("a conjunctive query needs at least one atom")
        ar: dict = {}
        for a in self.atoms:
            if not a.args:
                raise ValueError(f"atom {a} has no variables")
            if ar.setdefault(a.relation, len(a.args)) != len(a.args):
                raise ValueError(f"relation {a.relation} used with two arities")

    @property
    def variables(self) -> list:
        return sorted({v for a in self.atoms for v in a.args})

    @property
    def signature(self) -> Signature:
        return Signature({a.relation: len(a.args) for a in self.atoms})

    def primal_graph(self) -> dict:
        return primal_of_atoms(self.atoms)

    def canonical_instance(self) -> Instance:
        return Instance([Fact(a.relation, a.args) for a in self.atoms], self.signature)

    def __str__(self):
        return ", ".join(map(str, self.atoms))


_ATOM = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*")


def parse_cq(text: str) -> ConjunctiveQuery:
    """``R(x,y), S(y,z)`` (also ``∧`` / ``&``), optionally behind ``Goal :-`` and ending in ``.``."""
    body = text.split("%", 1)[0] if "\n" not in text else "\n".join(l.split("%", 1)[0] for l in text.splitlines())
    body = body.strip()
    for imp in (":-", "<-", "←"):
        if imp in body:
            body = body.split(imp, 1)[1]
    body = body.strip().rstrip(".")
    body = body.replace("∧", ",").replace("&", ",")
    atoms = []
    pos = 0
    while pos < len(body):
        m = _ATOM.match(body, pos)
        if not m:
            raise ParseError(f"expected an atom at {body[pos:pos + 20]!r}", 1, pos + 1)
        args = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
        atoms.append(Atom(m.group(1), args))
        pos = m.end()
        if pos < len(body):
            if body[pos] != ",":
                raise ParseError(f"expected ',' at {body[pos:pos + 20]!r}", 1, pos + 1)
            pos += 1
    return ConjunctiveQuery(atoms)


# ---------------------------------------------------------------------------
# join trees


def gyo_join_tree(q: ConjunctiveQuery) -> TreeDecomposition:
    """Join tree of an alpha-acyclic CQ by GYO ear removal; one bag per atom."""
    edges = [frozenset(a.args) for a in q.atoms]
    alive = list(range(len(edges)))
    parent = [-1] * len(edges)
    changed = True
    while len(alive) > 1 and changed:
        changed = False
        for e in list(alive):
            others = [f for f in alive if f != e]
            shared = edges[e] & frozenset().union(*(edges[f] for f in others))
            if not shared:
                # a separate component: hang it anywhere, the interface is empty
                parent[e] = others[0]
            else:
                wit = next((f for f in others if shared <= edges[f]), None)
                if wit is None:
                    continue
                parent[e] = wit
            alive.remove(e)
            changed = True
            break
    if len(alive) > 1:
        raise NotAlphaAcyclicError(
            "GYO reduction stalls on atoms " + ", ".join(str(q.atoms[i]) for i in alive)
        )
    # reroot at the surviving atom (it has parent -1 already)
    bags = [tuple(sorted(e)) for e in edges]
    return TreeDecomposition(bags, parent)


def bound_degree(t: TreeDecomposition) -> TreeDecomposition:
    """Rewrite so that every bag has at most 2^(k+1) children (k the width).

    Children with the same interface S hang off a chain of fresh bags with
    domain S, so interfaces (hence simpliciality) are unchanged.
    """
    bags: list = []
    parent: list = []

    def new(bag, par):
        bags.append(tuple(bag))
        parent.append(par)
        return len(bags) - 1

    root = t.root
    stack = [(root, -1)]
    while stack:
        b, par = stack.pop()
        me = new(t.bags[b], par)
        groups: dict = {}
        for c in t.children(b):
            s = tuple(sorted(set(t.bags[b]) & set(t.bags[c]), key=str))
            groups.setdefault(s, []).append(c)
        for s, cs in groups.items():
            link = me
            for c in cs:
                link = new(s, link)
                stack.append((c, link))
    return TreeDecomposition(bags, parent)


def max_degree(t: TreeDecomposition) -> int:
    return max(len(t.children(b)) for b in range(len(t)))


# ---------------------------------------------------------------------------
# translation


@dataclass(frozen=True)
class CQCertificate:
    """Width k, measured g = max atoms placed at one bag, the bound f(k), and the actual body size."""

    k: int
    g: int
    bound: int
    body_size: int

    def line(self) -> str:
        return f"% body_size={self.body_size} bound={self.bound} k={self.k} g={self.g}"


def _fresh_names(taken):
    n = 0
    while True:
        n += 1
        name = f"w{n}"
        if name not in taken:
            yield name


def translate_cq(q: ConjunctiveQuery, t: TreeDecomposition) -> tuple[Program, CQCertificate]:
    """Translate ``q`` given a simplicial decomposition ``t`` of it; also return the certificate."""
    graph = q.primal_graph()
    validate_decomposition(q.canonical_instance(), t)
    if not check_simplicial(graph, t):
        raise NotSimplicialError("some parent/child interface is not a clique of the primal graph")
    k = t.width
    t = bound_degree(t)
    # fresh empty root with a single child
    old_root = t.root
    if t.bags[old_root] or len(t.children(old_root)) != 1:
        bags = list(t.bags) + [()]
        parent = list(t.parent)
        parent[old_root] = len(bags) - 1
        parent.append(-1)
        t = TreeDecomposition(bags, parent)
    root = t.root
    kids = [t.children(b) for b in range(len(t))]
    order = t.preorder()
    depth = [0] * len(t.bags)
    for b in order:
        if t.parent[b] >= 0:
            depth[b] = depth[t.parent[b]] + 1
    # topmost bag holding each variable, then the deepest of those per atom
    top: dict = {}
    for b in order:
        for v in t.bags[b]:
            top.setdefault(v, b)
    placed: list = [[] for _ in t.bags]
    for a in q.atoms:
        b = max((top[v] for v in a.args), key=lambda x: depth[x])
        placed[b].append(a)
    # guard-pair atom lookup: the first atom for each pair
    mu: dict = {}
    for a in q.atoms:
        for x in a.args:
            for y in a.args:
                if x != y:
                    mu.setdefault(frozenset((x, y)), a)
    fresh = _fresh_names(set(q.variables))
    ext_names = set(q.signature.relations)
    preds: dict = {}
    child_of_root = kids[root][0]
    for b in range(len(t.bags)):
        if b == root:
            continue
        if b == child_of_root:
            preds[b] = GOAL
        else:
            name = f"P_{b}"
            while name in ext_names:
                name = "_" + name
            preds[b] = name

    def interface(b):
        return tuple(sorted(set(t.bags[b]) & set(t.bags[t.parent[b]]), key=str))

    first_atom: dict = {}
    for a in q.atoms:
        for v in a.args:
            first_atom.setdefault(v, a)

    def copy_for(z, keep):
        return Atom(z.relation, tuple(v if v in keep else next(fresh) for v in z.args))

    rules = []
    trivial: set = set()
    g = max(len(p) for p in placed)
    for b in reversed(order):
        if b == root:
            continue
        s = interface(b)
        guard = []
        for i, x in enumerate(s):
            for y in s[i + 1:]:
                guard.append(copy_for(mu[frozenset((x, y))], (x, y)))
        calls = [Atom(preds[c], interface(c)) for c in kids[b] if c not in trivial]
        atoms = guard + placed[b] + calls
        covered = {v for a in atoms for v in a.args}
        for x in s:
            if x not in covered:
                # a lone interface variable needs some atom to range over
                atoms.insert(0, copy_for(first_atom[x], (x,)))
        if not atoms:
            trivial.add(b)
            continue
        rules.append(Rule(Atom(preds[b], s), tuple(Literal(a) for a in atoms)))
    p = make_program(rules, q.signature)
    bound = (k + 1) * (g + 2 ** (k + 1) + k * (k + 1) // 2)
    return p, CQCertificate(k, g, bound, body_size(p))


def cq_to_cfg(q: ConjunctiveQuery, t: TreeDecomposition) -> Program:
    """Equivalent positive, nonrecursive, conjunctive CFG-Datalog program."""
    return translate_cq(q, t)[0]


# ---------------------------------------------------------------------------
# oracle


def cq_holds(q: ConjunctiveQuery, instance: Instance) -> bool:
    """Homomorphism search from the query to the instance (backtracking, most constrained atom first)."""
    rel = instance.by_relation()
    atoms = list(q.atoms)
    for a in atoms:
        if not rel.get(a.relation):
            return False

    def solve(remaining, env):
        if not remaining:
            return True
        # most bound variables first
        best = max(remaining, key=lambda a: sum(v in env for v in a.args))
        rest = [a for a in remaining if a is not best]
        for tup in rel.get(best.relation, ()):
            new = dict(env)
            ok = True
            for v, x in zip(best.args, tup):
                if new.setdefault(v, x) != x:
                    ok = False
                    break
            if ok and solve(rest, new):
                return True
        return False

    return solve(atoms, {})
