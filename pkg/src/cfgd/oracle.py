"""Brute-force oracles and seeded generators for differential testing."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .cycluit import AND, INP, NOT, OR, Cycluit
from .datalog import (GOAL, Atom, Literal, Program, Rule, body_size, check_cfg, check_gn, make_program,
                      naive_eval, stratify)
from .errors import SizeLimitError
from .relational import Fact, Instance, Signature
from .treewidth import TreeDecomposition

MAX_TABLE_FACTS = 20


@dataclass
class TruthTable:
    """``bits[r]`` is the acceptance on the subinstance keeping ``order[j]`` iff bit j of r is set."""

    order: list
    bits: np.ndarray

    def row(self, present) -> int:
        present = set(present)
        r = sum(1 << j for j, f in enumerate(self.order) if f in present)
        return int(self.bits[r])

    def to_csv(self) -> str:
        head = ",".join(str(f) for f in self.order) + ",accept\n"
        lines = []
        for r, b in enumerate(self.bits.tolist()):
            lines.append(",".join(str((r >> j) & 1) for j in range(len(self.order))) + f",{b}\n")
        return head + "".join(lines)


def brute_provenance(p: Program, instance: Instance, order: list | None = None) -> TruthTable:
    """Naive evaluation on every subinstance (domain kept fixed to the full instance)."""
    order = sorted(instance.facts) if order is None else list(order)
    n = len(order)
    if n > MAX_TABLE_FACTS:
        raise SizeLimitError(f"truth tables are limited to {MAX_TABLE_FACTS} facts")
    strata = stratify(p)
    dom = instance.dom
    bits = np.zeros(1 << n, dtype=np.uint8)
    sig = instance.signature
    for r in range(1 << n):
        sub = Instance([order[j] for j in range(n) if r >> j & 1], sig)
        bits[r] = naive_eval(p, sub, strata, domain=dom).accepted
    return TruthTable(order, bits)


# ---------------------------------------------------------------------------
# the conciseness family


def gen_pn(i: int) -> Program:
    """R_0(x,y) <- R(x,y); R_j(x,y) <- G(x,y), R_{j-1}(x,z), R_{j-1}(z,y); Goal() <- R_i(x,y)."""
    if i < 1:
        raise ValueError("i must be >= 1")
    x, y, z = "x", "y", "z"
    rules = [Rule(Atom("R_0", (x, y)), (Literal(Atom("R", (x, y))),))]
    for j in range(1, i + 1):
        prev = f"R_{j - 1}"
        rules.append(Rule(Atom(f"R_{j}", (x, y)), (
            Literal(Atom("G", (x, y))), Literal(Atom(prev, (x, z))), Literal(Atom(prev, (z, y))),
        )))
    rules.append(Rule(Atom(GOAL, ()), (Literal(Atom(f"R_{i}", (x, y))),)))
    return make_program(rules, {"R": 2, "G": 2})


def gen_pn_instance(i: int) -> tuple[Instance, TreeDecomposition]:
    """An R-path a0 .. a_{2^i} with G over every aligned interval of length 2^j, j >= 1,
    and the interval decomposition {a_l, a_mid, a_r} (width 2)."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if i > 16:
        raise SizeLimitError("i is limited to 16")
    n = 1 << i
    a = [f"a{t}" for t in range(n + 1)]
    facts = [Fact("R", (a[t], a[t + 1])) for t in range(n)]
    for j in range(1, i + 1):
        step = 1 << j
        for m in range(n // step):
            facts.append(Fact("G", (a[m * step], a[(m + 1) * step])))
    bags, parent = [], []
    todo = [(0, n, -1)]
    while todo:
        lo, hi, par = todo.pop()
        mid = (lo + hi) // 2
        bags.append((a[lo], a[mid], a[hi]))
        parent.append(par)
        me = len(bags) - 1
        if hi - lo > 2:
            todo.append((mid, hi, me))
            todo.append((lo, mid, me))
    return Instance(facts, Signature({"R": 2, "G": 2})), TreeDecomposition(bags, parent)


# ---------------------------------------------------------------------------
# random programs and instances

DEFAULT_SIGNATURE = Signature({"A": 1, "B": 1, "R": 2, "S": 2})


def random_gn_program(seed, body_size_cap: int = 8, signature: Signature = DEFAULT_SIGNATURE) -> Program:
    """A random stratified program whose rules are frontier- and negation-guarded.

    Candidates are drawn until one passes ``check_cfg``, ``check_gn`` and the cap.
    """
    rng = random.Random(seed)
    while True:
        p = _try_program(rng, body_size_cap, signature)
        if p is not None and check_cfg(p).ok and check_gn(p).ok:
            return p


def _try_program(rng, cap, sig):
    ext = sorted(sig.relations.items())
    max_ar = max(ar for _, ar in ext)
    n_int = rng.randint(1, 3)
    ints = []
    for t in range(n_int):
        ar = rng.choice([1, 1, 2]) if max_ar >= 2 else 1
        ints.append((f"P{t}", ar, rng.randint(1, 2)))  # name, arity, level
    arity = max(max_ar, max(ar for _, ar, _ in ints))
    max_atoms = max(1, cap // arity)
    vars_pool = ["x", "y", "z", "u"]
    rules = []

    def pick_atom(level, allow_int=True, vars_=vars_pool):
        cands = [(nm, ar, False) for nm, ar in ext]
        if allow_int:
            cands += [(nm, ar, True) for nm, ar, lv in ints if lv <= level]
        nm, ar, _ = rng.choice(cands)
        return Atom(nm, tuple(rng.choice(vars_) for _ in range(ar)))

    def body_for(head: Atom, level):
        n_atoms = rng.randint(1, max_atoms)
        pos: list = []
        hv = list(dict.fromkeys(head.args))
        if len(hv) == 2:
            # a guard holding both head variables
            binaries = [(nm, False) for nm, ar in ext if ar == 2]
            binaries += [(nm, True) for nm, ar, lv in ints if ar == 2 and lv <= level]
            if not binaries:
                return None
            nm, _ = rng.choice(binaries)
            pos.append(Atom(nm, tuple(hv) if rng.random() < 0.5 else tuple(reversed(hv))))
        elif len(hv) == 1:
            unaries = [nm for nm, ar in ext if ar == 1] + [nm for nm, ar, lv in ints if ar == 1 and lv <= level]
            if unaries and rng.random() < 0.6:
                pos.append(Atom(rng.choice(unaries), (hv[0],)))
            else:
                at = pick_atom(level)
                args = list(at.args)
                args[rng.randrange(len(args))] = hv[0]
                pos.append(Atom(at.relation, tuple(args)))
        while len(pos) < n_atoms and rng.random() < 0.75:
            pos.append(pick_atom(level))
        room = max_atoms - len(pos)
        negs = []
        lower = [(nm, ar) for nm, ar, lv in ints if lv < level]
        while room > 0 and lower and rng.random() < 0.5:
            nm, ar = rng.choice(lower)
            if ar == 1:
                negs.append(Atom(nm, (rng.choice(vars_pool),)))
            else:
                guard = rng.choice(pos) if pos else None
                gv = list(guard.args) if guard else []
                if not gv:
                    break
                negs.append(Atom(nm, (rng.choice(gv), rng.choice(gv))))
            room -= 1
        if not pos and not negs:
            return None
        body = [Literal(a) for a in pos] + [Literal(a, False) for a in negs]
        rng.shuffle(body)
        return tuple(body)

    for nm, ar, lv in ints:
        for _ in range(rng.randint(1, 2)):
            head = Atom(nm, tuple(rng.sample(vars_pool, ar)) if ar == 2 else (rng.choice(vars_pool),))
            body = body_for(head, lv)
            if body is None:
                continue
            rules.append(Rule(head, body))
    goal_level = 3
    for _ in range(rng.randint(1, 2)):
        body = body_for(Atom(GOAL, ()), goal_level)
        if body is not None:
            rules.append(Rule(Atom(GOAL, ()), body))
    try:
        p = make_program(rules, sig)
        stratify(p)
    except Exception:
        return None
    if body_size(p) > cap:
        return None
    return p


def random_tw_instance(seed, width: int = 2, size: int = 8,
                       signature: Signature = DEFAULT_SIGNATURE) -> tuple[Instance, TreeDecomposition]:
    """Random bags glued along a random tree, then random facts inside bags.

    Bags are finally intersected with the active domain, so the returned
    decomposition is valid for the instance at width <= ``width``.
    """
    rng = random.Random(seed)
    nbags = max(1, rng.randint(1, max(1, size)))
    elem = 0
    bags: list = []
    parent: list = []
    for b in range(nbags):
        if b == 0:
            k = rng.randint(1, width + 1)
            bag = [f"c{elem + t}" for t in range(k)]
            elem += k
            par = -1
        else:
            par = rng.randrange(b)
            keep = [e for e in bags[par] if rng.random() < 0.6]
            room = width + 1 - len(keep)
            fresh = rng.randint(0 if keep else 1, room)
            bag = keep + [f"c{elem + t}" for t in range(fresh)]
            elem += fresh
        bags.append(bag)
        parent.append(par)
    rels = sorted(signature.relations.items())
    facts = set()
    tries = 0
    while len(facts) < size and tries < 20 * size + 20:
        tries += 1
        bag = bags[rng.randrange(nbags)]
        nm, ar = rng.choice(rels)
        facts.add(Fact(nm, tuple(rng.choice(bag) for _ in range(ar))))
    inst = Instance(facts, signature)
    bags = [[e for e in bag if e in inst.dom] for bag in bags]
    return inst, TreeDecomposition(bags, parent)


# ---------------------------------------------------------------------------
# random cycluits


def random_monotone_cycluit(seed, max_gates: int = 50) -> Cycluit:
    """AND/OR gates wired to arbitrary gates (cycles allowed) over a few inputs."""
    rng = random.Random(seed)
    n = rng.randint(2, max_gates)
    n_inp = rng.randint(1, max(1, min(8, n // 3)))
    types = [INP] * n_inp + [rng.choice((AND, OR)) for _ in range(n - n_inp)]
    inputs = [[] for _ in range(n)]
    for g in range(n_inp, n):
        fan = rng.choice((0, 1, 1, 2, 2, 2, 3)) if types[g] == AND else rng.randint(0, 3)
        inputs[g] = sorted({rng.randrange(n) for _ in range(fan)})
    return Cycluit.from_lists(types, inputs, rng.randrange(n_inp, n))


def random_stratified_cycluit(seed, max_gates: int = 50, levels: int = 4) -> Cycluit:
    """Gates spread over levels; AND/OR read the same or lower levels (so may be cyclic),
    NOT gates read strictly lower levels only."""
    rng = random.Random(seed)
    n = rng.randint(3, max_gates)
    n_inp = rng.randint(1, max(1, min(8, n // 3)))
    level = [0] * n_inp + sorted(rng.randint(1, levels) for _ in range(n - n_inp))
    types = [INP] * n_inp
    for g in range(n_inp, n):
        types.append(NOT if rng.random() < 0.25 else rng.choice((AND, OR)))
    inputs = [[] for _ in range(n)]
    for g in range(n_inp, n):
        if types[g] == NOT:
            lower = [h for h in range(n) if level[h] < level[g]]
            inputs[g] = [rng.choice(lower)]
            continue
        pool = [h for h in range(n) if level[h] <= level[g]]
        inputs[g] = sorted({rng.choice(pool) for _ in range(rng.randint(0, 3))})
    return Cycluit.from_lists(types, inputs, rng.randrange(n_inp, n))


def random_stratification(c: Cycluit, seed) -> np.ndarray:
    """A valid stratification from a random linear extension of the SCC condensation.

    Each non-input SCC gets its own stratum, so it is usually far from the
    compact one.
    """
    from ._graph import tarjan_scc

    rng = random.Random(seed)
    n = len(c)
    sptr, sidx = c.successors()
    succ = [sidx[sptr[g]:sptr[g + 1]].tolist() for g in range(n)]
    comp = tarjan_scc(n, succ)
    ncomp = max(comp) + 1 if n else 0
    preds: list = [set() for _ in range(ncomp)]
    for g in range(n):
        for h in succ[g]:
            if comp[g] != comp[h]:
                preds[comp[h]].add(comp[g])
    indeg = [len(p) for p in preds]
    out: list = [[] for _ in range(ncomp)]
    for cc in range(ncomp):
        for p in preds[cc]:
            out[p].append(cc)
    ready = [cc for cc in range(ncomp) if indeg[cc] == 0]
    rank = [0] * ncomp
    nxt = 1
    is_inp = [False] * ncomp
    for g in np.flatnonzero(c.types == INP).tolist():
        is_inp[comp[g]] = True
    while ready:
        cc = ready.pop(rng.randrange(len(ready)))
        if not is_inp[cc]:
            rank[cc] = nxt
            nxt += rng.randint(1, 2)
        for d in out[cc]:
            indeg[d] -= 1
            if indeg[d] == 0:
                ready.append(d)
    return np.asarray([rank[comp[g]] for g in range(n)], dtype=np.int32)


def inject_not_cycle(c: Cycluit, seed) -> Cycluit:
    """Close a cycle through some NOT gate (adding one NOT gate if there is none)."""
    rng = random.Random(seed)
    types = c.types.tolist()
    inputs = c.input_lists()
    nots = [g for g, t in enumerate(types) if t == NOT]
    if not nots:
        types.append(NOT)
        inputs.append([rng.randrange(len(types) - 1)])
        nots = [len(types) - 1]
    g = rng.choice(nots)
    x = inputs[g][0]
    if types[x] in (AND, OR):
        inputs[x] = sorted(set(inputs[x]) | {g})
    else:
        # route the NOT gate's input through a fresh OR gate it feeds
        y = len(types)
        types.append(OR)
        inputs.append([x, g])
        inputs[g] = [y]
    return Cycluit.from_lists(types, inputs, c.output)


# ---------------------------------------------------------------------------
# random queries for the frontends

CQ_SIGNATURE = Signature({"U": 1, "R": 2, "S": 2, "T": 3})
PATH_SIGNATURE = Signature({"R": 2, "S": 2})


def random_acyclic_cq(seed, max_atoms: int = 5, signature: Signature = CQ_SIGNATURE):
    """Atoms grown along a random join tree: each new atom shares a subset of its parent's variables."""
    from .frontends.cq import ConjunctiveQuery

    rng = random.Random(seed)
    rels = sorted(signature.relations.items())
    nvar = 0

    def fresh():
        nonlocal nvar
        nvar += 1
        return f"x{nvar}"

    atoms: list = []
    for t in range(rng.randint(1, max_atoms)):
        nm, ar = rng.choice(rels)
        if t == 0 or rng.random() < 0.1:
            shared = []
        else:
            par = rng.choice(atoms)
            pv = sorted(set(par.args))
            shared = rng.sample(pv, rng.randint(1, min(ar, len(pv))))
        args = list(shared) + [fresh() for _ in range(ar - len(shared))]
        rng.shuffle(args)
        atoms.append(Atom(nm, tuple(args)))
    return ConjunctiveQuery(atoms)


def random_cq_instance(q, seed, max_width: int = 2) -> Instance:
    """The canonical instance of a perturbed copy of ``q`` (merged variables, a dropped atom,
    a few extra facts), retried until its min-fill width is at most ``max_width``."""
    from .treewidth import decompose_minfill

    rng = random.Random(seed)
    sig = q.signature
    while True:
        vs = q.variables
        target = {v: rng.choice(vs) if rng.random() < 0.3 else v for v in vs}
        atoms = list(q.atoms)
        if len(atoms) > 1 and rng.random() < 0.5:
            atoms.pop(rng.randrange(len(atoms)))
        facts = {Fact(a.relation, tuple(target[v] for v in a.args)) for a in atoms}
        elems = sorted({e for f in facts for e in f.args})
        for _ in range(rng.randint(0, 3)):
            nm, ar = rng.choice(sorted(sig.relations.items()))
            facts.add(Fact(nm, tuple(rng.choice(elems + ["e1", "e2"]) for _ in range(ar))))
        inst = Instance(facts, sig)
        if decompose_minfill(inst).width <= max_width:
            return inst


def random_regex(seed, depth: int = 3, relations=("R", "S")) -> str:
    """A random 2RPQ over ``relations`` in the concrete syntax of ``parse_regex``."""
    rng = random.Random(seed)

    def gen(d):
        r = rng.random()
        if d == 0 or r < 0.3:
            if rng.random() < 0.05:
                return "eps"
            return rng.choice(relations) + ("-" if rng.random() < 0.3 else "")
        if r < 0.6:
            return f"({gen(d - 1)}.{gen(d - 1)})"
        if r < 0.85:
            return f"({gen(d - 1)}|{gen(d - 1)})"
        return f"({gen(d - 1)})" + rng.choice("*+?")

    return gen(depth)


GNF_SIGNATURE = Signature({"A": 1, "R": 2, "S": 2})


def random_gnf(seed, depth: int = 2, signature: Signature = GNF_SIGNATURE) -> str:
    """A random Boolean weak-normal-form formula, as an s-expression string."""
    rng = random.Random(seed)
    rels = sorted(signature.relations.items())
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"v{counter[0]}"

    def atom(pool):
        nm, ar = rng.choice(rels)
        return f"({nm} {' '.join(rng.choice(pool) for _ in range(ar))})"

    def phi(d, ctx):
        ds = [disj(d, ctx) for _ in range(rng.choice((1, 1, 2)))]
        return ds[0] if len(ds) == 1 else "(or " + " ".join(ds) + ")"

    def disj(d, ctx):
        nb = rng.randint(1 if not ctx else 0, 2)
        bound = [fresh() for _ in range(nb)]
        pool = list(ctx) + bound
        conj = [psi(d, pool) for _ in range(rng.randint(1, 2))]
        body = conj[0] if len(conj) == 1 else "(and " + " ".join(conj) + ")"
        return f"(exists ({' '.join(bound)}) {body})" if bound else body

    def psi(d, pool):
        r = rng.random()
        if d == 0 or r < 0.4:
            return atom(pool)
        nm, ar = rng.choice(rels)
        gargs = [rng.choice(pool) for _ in range(ar)]
        guard = f"({nm} {' '.join(gargs)})"
        sub = phi(d - 1, sorted(set(gargs)))
        if r < 0.7:
            return f"(nguarded {guard} (not {sub}))"
        return f"(guarded {guard} {sub})"

    return phi(depth, [])
