"""Stratified Datalog: syntax tree, parser, stratification, syntactic checks and a naive evaluator.

The evaluator here is deliberately simple and serves as the reference the
automaton pipeline is tested against.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Iterable

from ._graph import path_within, tarjan_scc
from .errors import NotStratifiableError, ParseError, ProgramError
from .relational import Instance, Signature

GOAL = "Goal"


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple = ()

    def __str__(self):
        return f"{self.relation}({','.join(self.args)})"

    @property
    def vars(self) -> frozenset:
        return frozenset(self.args)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"

    @property
    def vars(self) -> frozenset:
        return self.atom.vars


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple

    def __str__(self):
        return f"{self.head} :- {', '.join(map(str, self.body))}."

    @property
    def vars(self) -> frozenset:
        out = set(self.head.args)
        for lit in self.body:
            out |= lit.vars
        return frozenset(out)

    @property
    def positive(self) -> tuple:
        return tuple(l for l in self.body if l.positive)

    @property
    def negative(self) -> tuple:
        return tuple(l for l in self.body if not l.positive)


@dataclass(frozen=True)
class Program:
    """A Datalog program; relations occurring in heads (and Goal) are intensional."""

    rules: tuple
    extensional: Signature = field(default_factory=Signature)
    intensional: Signature = field(default_factory=Signature)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __hash__(self):
        return hash(self.rules)

    def __eq__(self, other):
        return isinstance(other, Program) and self.rules == other.rules and \
            self.extensional == other.extensional

    def __str__(self):
        return format_program(self)

    @property
    def arity(self) -> int:
        return max(self.extensional.max_arity, self.intensional.max_arity)

    def rules_for(self, relation: str) -> tuple:
        return tuple(r for r in self.rules if r.head.relation == relation)

    def is_intensional(self, relation: str) -> bool:
        return relation in self.intensional

    @property
    def is_positive(self) -> bool:
        return all(l.positive for r in self.rules for l in r.body)


def make_program(rules: Iterable[Rule], extensional: Signature | dict | None = None) -> Program:
    """Infer the signatures and check the well-formedness conditions."""
    rules = tuple(rules)
    arities: dict = {GOAL: 0}
    heads = {GOAL}
    for r in rules:
        heads.add(r.head.relation)

    def note(at: Atom):
        ar = arities.setdefault(at.relation, len(at.args))
        if ar != len(at.args):
            raise ProgramError(f"relation {at.relation} used with arities {ar} and {len(at.args)}")

    for r in rules:
        note(r.head)
        for lit in r.body:
            note(lit.atom)
    ext = dict(extensional.relations if isinstance(extensional, Signature) else (extensional or {}))
    for name in ext:
        if name in heads:
            raise ProgramError(f"relation {name} is declared extensional but has rules")
        if name in arities and arities[name] != ext[name]:
            raise ProgramError(f"relation {name} has arity {ext[name]} but is used with {arities[name]}")
    for name, ar in arities.items():
        if name not in heads:
            ext.setdefault(name, ar)
    if arities[GOAL] != 0:
        raise ProgramError("Goal must have arity 0")
    for r in rules:
        if not r.body:
            raise ProgramError(f"rule for {r.head.relation} has an empty body")
        body_vars = set().union(*(l.vars for l in r.body))
        missing = set(r.head.args) - body_vars
        if missing:
            raise ProgramError(f"head variables {sorted(missing)} of {r} do not occur in the body")
        for lit in r.body:
            if not lit.positive and lit.atom.relation not in heads:
                raise ProgramError(f"negated extensional atom {lit.atom} in {r}")
    for name in ext:
        if ext[name] < 1:
            raise ProgramError(f"extensional relation {name} must have arity >= 1")
    intensional = Signature({h: arities[h] for h in sorted(heads)}, nullary=True)
    return Program(rules, Signature(ext), intensional)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<comment>%[^\n]*)|(?P<imp>:-|<-|←)|(?P<not>not\b|¬|!)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[(),.∧&]))"
)


def _tokens(text: str):
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        if text[pos] == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        if text[pos] in " \t\r":
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        col = start - line_start + 1
        pos = m.end()
        if kind == "comment":
            continue
        if kind == "punct" and val in "∧&":
            val = ","
        yield kind, val, line, col
    yield "eof", "", line, pos - line_start + 1


def parse_program(text: str, extensional: Signature | dict | None = None) -> Program:
    """Parse rules of the form ``Head(X,Y) :- A(X,Z), not B(Z,Y).``"""
    toks = list(_tokens(text))
    i = 0

    def peek():
        return toks[i]

    def take(kind=None, val=None):
        nonlocal i
        t = toks[i]
        if (kind and t[0] != kind) or (val is not None and t[1] != val):
            want = val if val is not None else kind
            raise ParseError(f"expected {want!r}, found {t[1] or 'end of input'!r}", t[2], t[3])
        i += 1
        return t

    def atom():
        name = take("ident")[1]
        args: list = []
        if peek()[1] == "(":
            take(val="(")
            if peek()[1] != ")":
                args.append(take("ident")[1])
                while peek()[1] == ",":
                    take(val=",")
                    args.append(take("ident")[1])
            take(val=")")
        return Atom(name, tuple(args))

    rules = []
    while peek()[0] != "eof":
        t = peek()
        head = atom()
        try:
            take("imp")
        except ParseError:
            raise ParseError("expected ':-' after rule head (facts are not allowed in programs)",
                             toks[i][2], toks[i][3]) from None
        body = []
        while True:
            pos = True
            if peek()[0] == "not":
                take("not")
                pos = False
            body.append(Literal(atom(), pos))
            if peek()[1] == ",":
                take(val=",")
                continue
            take(val=".")
            break
        try:
            rules.append(Rule(head, tuple(body)))
        except ProgramError as e:  # pragma: no cover - Rule itself does not validate
            raise ParseError(str(e), t[2], t[3]) from None
    return make_program(rules, extensional)


def format_program(p: Program) -> str:
    return "".join(f"{r}\n" for r in p.rules)


# ---------------------------------------------------------------------------
# stratification


def _dependencies(p: Program):
    rels = sorted(p.intensional.relations)
    idx = {r: i for i, r in enumerate(rels)}
    succ = [set() for _ in rels]
    neg_edges = set()
    for r in p.rules:
        h = idx[r.head.relation]
        for lit in r.body:
            b = lit.atom.relation
            if b in idx:
                succ[h].add(idx[b])
                if not lit.positive:
                    neg_edges.add((h, idx[b]))
    return rels, idx, [sorted(s) for s in succ], neg_edges


def stratify(p: Program) -> dict:
    """Strata (1-based) for the intensional relations, from the SCC condensation."""
    rels, idx, succ, neg_edges = _dependencies(p)
    comp = tarjan_scc(len(rels), succ)
    for h, b in sorted(neg_edges):
        if comp[h] == comp[b]:
            members = {v for v in range(len(rels)) if comp[v] == comp[h]}
            back = [b] if b == h else path_within(succ, b, h, members)
            cycle = [rels[h]] + [rels[v] for v in back]
            raise NotStratifiableError(cycle)
    # Tarjan numbers components so that dependencies come first
    ncomp = max(comp) + 1 if comp else 0
    members = [[] for _ in range(ncomp)]
    for v, c in enumerate(comp):
        members[c].append(v)
    cstrat = [1] * ncomp
    for c in range(ncomp):
        s = 1
        for v in members[c]:
            for w in succ[v]:
                if comp[w] == c:
                    continue
                s = max(s, cstrat[comp[w]] + (1 if (v, w) in neg_edges else 0))
        cstrat[c] = s
    return {r: cstrat[comp[i]] for i, r in enumerate(rels)}


def check_stratification(p: Program, strata: dict) -> bool:
    """Independent check of the three stratification conditions."""
    for rel in p.intensional.relations:
        if strata.get(rel, 0) < 1:
            return False
    for r in p.rules:
        h = strata[r.head.relation]
        for lit in r.body:
            b = lit.atom.relation
            if b not in p.intensional:
                continue
            if lit.positive and strata[b] > h:
                return False
            if not lit.positive and strata[b] >= h:
                return False
    return True


def format_strata(strata: dict) -> str:
    return "".join(f"{r}\t{s}\n" for r, s in sorted(strata.items(), key=lambda x: (x[1], x[0])))


def is_recursive(p: Program) -> bool:
    rels, idx, succ, _ = _dependencies(p)
    comp = tarjan_scc(len(rels), succ)
    if len(set(comp)) < len(rels):
        return True
    return any(v in succ[v] for v in range(len(rels)))


# ---------------------------------------------------------------------------
# syntactic fragments


def body_size(p: Program) -> int:
    atoms = max((len(r.body) for r in p.rules), default=0)
    return atoms * p.arity


@dataclass
class CheckReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "pass"
        return "\n".join(f"rule {i}: {r} -- {x} and {y} {why}" for i, r, (x, y), why in self.violations)


def _guarded_pairs(rule: Rule) -> set:
    pairs = set()
    for lit in rule.positive:
        for a in lit.vars:
            for b in lit.vars:
                pairs.add((a, b))
    return pairs


def _unguarded(vars_: Iterable, guarded: set) -> list:
    vs = sorted(set(vars_))
    return [(a, b) for i, a in enumerate(vs) for b in vs[i + 1:] if (a, b) not in guarded]


def check_cfg(p: Program) -> CheckReport:
    """Every pair of head variables must co-occur in a positive body atom."""
    out = []
    for i, r in enumerate(p.rules):
        g = _guarded_pairs(r)
        for pair in _unguarded(r.head.args, g):
            out.append((i, r, pair, "do not co-occur in a positive body atom"))
    return CheckReport(out)


def check_gn(p: Program) -> CheckReport:
    """Every negative literal must be clique-guarded by positive body atoms."""
    out = []
    for i, r in enumerate(p.rules):
        g = _guarded_pairs(r)
        for lit in r.negative:
            for pair in _unguarded(lit.vars, g):
                out.append((i, r, pair, f"of {lit} are not guarded"))
    return CheckReport(out)


# ---------------------------------------------------------------------------
# naive evaluation


class _RulePlan:
    """Join order for one rule: positive atoms, then free variables, then negations."""

    __slots__ = ("head_rel", "head_idx", "steps", "free", "negs", "nvars")

    def __init__(self, rule: Rule):
        vars_ = sorted(rule.vars)
        vid = {v: i for i, v in enumerate(vars_)}
        self.nvars = len(vars_)
        self.head_rel = rule.head.relation
        self.head_idx = tuple(vid[v] for v in rule.head.args)
        bound: set = set()
        remaining = list(rule.positive)
        steps = []
        while remaining:
            # most bound variables first, then fewest new ones
            best = max(remaining, key=lambda l: (len(l.vars & bound), -len(l.vars - bound)))
            remaining.remove(best)
            checks, binds = [], []
            local: dict = {}
            for pos, v in enumerate(best.atom.args):
                if v in bound or v in local:
                    checks.append((pos, vid[v]))
                else:
                    local[v] = pos
                    binds.append((pos, vid[v]))
            # repeated new variables within the atom become checks after binding
            steps.append((best.atom.relation, tuple(binds), tuple(checks)))
            bound |= best.vars
        self.steps = tuple(steps)
        self.free = tuple(vid[v] for v in vars_ if v not in bound)
        self.negs = tuple((l.atom.relation, tuple(vid[v] for v in l.atom.args)) for l in rule.negative)


@functools.lru_cache(maxsize=256)
def _plans(p: Program):
    return tuple(_RulePlan(r) for r in p.rules)


def _fire(plan: _RulePlan, db: dict, domain: tuple, out: set):
    val = [None] * plan.nvars
    steps = plan.steps
    nsteps = len(steps)
    free = plan.free
    negs = plan.negs
    head_idx = plan.head_idx

    def finish(j):
        if j < len(free):
            v = free[j]
            for c in domain:
                val[v] = c
                finish(j + 1)
            return
        for rel, idx in negs:
            if tuple(val[x] for x in idx) in db[rel]:
                return
        out.add(tuple(val[x] for x in head_idx))

    def step(i):
        if i == nsteps:
            finish(0)
            return
        rel, binds, checks = steps[i]
        for t in db[rel]:
            for pos, v in binds:
                val[v] = t[pos]
            ok = True
            for pos, v in checks:
                if val[v] != t[pos]:
                    ok = False
                    break
            if ok:
                step(i + 1)

    step(0)


@dataclass
class EvalResult:
    relations: dict  # intensional relation -> set of tuples

    @property
    def accepted(self) -> bool:
        return bool(self.relations.get(GOAL))

    def facts(self, relation: str) -> set:
        return self.relations.get(relation, set())


def naive_eval(p: Program, instance: Instance, strata: dict | None = None, domain=None) -> EvalResult:
    """Stratum-by-stratum naive fixpoint of the immediate consequence operator.

    Variables range over ``domain`` (default: the active domain of ``instance``).
    """
    if strata is None:
        strata = stratify(p)
    dom = tuple(sorted(instance.dom if domain is None else domain))
    db: dict = {}
    for f in instance.facts:
        db.setdefault(f.relation, set()).add(f.args)
    for rel in p.extensional.relations:
        db.setdefault(rel, set())
    for rel in p.intensional.relations:
        db[rel] = set()
    plans = _plans(p)
    by_stratum: dict = {}
    for plan in plans:
        by_stratum.setdefault(strata[plan.head_rel], []).append(plan)
    for s in sorted(by_stratum):
        group = by_stratum[s]
        while True:
            new: dict = {}
            for plan in group:
                out: set = set()
                _fire(plan, db, dom, out)
                fresh = out - db[plan.head_rel]
                if fresh:
                    new.setdefault(plan.head_rel, set()).update(fresh)
            if not new:
                break
            for rel, ts in new.items():
                db[rel] |= ts
    return EvalResult({rel: db[rel] for rel in p.intensional.relations})
