"""Guarded-negation formulas in weak normal form, as s-expressions, and their translation.

Grammar (``phi`` at the top, Boolean):

    phi  ::= (or disj ...) | disj
    disj ::= (exists (v ...) conj) | conj
    conj ::= (and psi ...) | psi
    psi  ::= (R v ...)                      an atom
           | (guarded (G v ...) phi)        G holds every free variable of phi
           | (nguarded (G v ...) (not phi))
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from ..datalog import GOAL, Atom, Literal, Program, Rule, body_size, make_program
from ..errors import NotNormalFormError, ParseError
from ..relational import Instance

KEYWORDS = {"or", "exists", "and", "guarded", "nguarded", "not"}


# -- s-expressions ----------------------------------------------------------

_SEXP_TOK = re.compile(r"\s*(?:(;[^\n]*|%[^\n]*)|([()])|([^\s()]+))")


def read_sexp(text: str):
    toks = []
    for m in _SEXP_TOK.finditer(text):
        if m.group(2):
            toks.append(m.group(2))
        elif m.group(3):
            toks.append(m.group(3))
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise ParseError("unexpected end of formula", None, None)
        t = toks[pos]
        pos += 1
        if t == "(":
            out = []
            while pos < len(toks) and toks[pos] != ")":
                out.append(read())
            if pos >= len(toks):
                raise ParseError("missing ')'", None, None)
            pos += 1
            return out
        if t == ")":
            raise ParseError("unexpected ')'", None, None)
        return t

    e = read()
    if pos != len(toks):
        raise ParseError("trailing input after formula", None, None)
    return e


def _show(e) -> str:
    return e if isinstance(e, str) else "(" + " ".join(_show(x) for x in e) + ")"


# -- abstract syntax --------------------------------------------------------


@dataclass
class Psi:
    kind: str  # "atom" | "guarded" | "nguarded"
    atom: Atom
    sub: "Phi | None" = None


@dataclass
class Disjunct:
    bound: tuple
    conj: list


@dataclass
class Phi:
    disjuncts: list
    free: tuple = ()
    node: int = -1
    guard: Atom | None = None  # guard of the enclosing psi, None at the root


@dataclass
class GNFFormula:
    root: Phi
    nodes: list = field(default_factory=list)

    @property
    def cq_rank(self) -> int:
        """Most conjuncts in one disjunct once psi-formulas are inlined (a guard and its subformula count as two)."""
        return max(sum(1 if p.kind == "atom" else 2 for p in d.conj) for n in self.nodes for d in n.disjuncts)


def _atom(e) -> Atom:
    if not isinstance(e, list) or not e or not isinstance(e[0], str) or e[0] in KEYWORDS:
        raise NotNormalFormError(f"expected an atom, got {_show(e)}")
    if not e[1:] or any(not isinstance(x, str) for x in e[1:]):
        raise NotNormalFormError(f"atom arguments must be variables: {_show(e)}")
    return Atom(e[0], tuple(e[1:]))


def _phi(e) -> Phi:
    if isinstance(e, list) and e and e[0] == "or":
        if len(e) < 2:
            raise NotNormalFormError("empty disjunction")
        return Phi([_disj(x) for x in e[1:]])
    return Phi([_disj(e)])


def _disj(e) -> Disjunct:
    if isinstance(e, list) and e and e[0] == "exists":
        if len(e) != 3 or not isinstance(e[1], list) or any(not isinstance(v, str) for v in e[1]):
            raise NotNormalFormError(f"malformed quantifier {_show(e)}")
        return Disjunct(tuple(e[1]), _conj(e[2]))
    return Disjunct((), _conj(e))


def _conj(e) -> list:
    if isinstance(e, list) and e and e[0] == "and":
        if len(e) < 2:
            raise NotNormalFormError("empty conjunction")
        return [_psi(x) for x in e[1:]]
    return [_psi(e)]


def _psi(e) -> Psi:
    if not isinstance(e, list) or not e:
        raise NotNormalFormError(f"expected a formula, got {_show(e)}")
    head = e[0]
    if head == "guarded":
        if len(e) != 3:
            raise NotNormalFormError(f"guarded takes a guard atom and a formula: {_show(e)}")
        return Psi("guarded", _atom(e[1]), _phi(e[2]))
    if head == "nguarded":
        if len(e) != 3 or not (isinstance(e[2], list) and e[2] and e[2][0] == "not" and len(e[2]) == 2):
            raise NotNormalFormError(f"nguarded takes a guard atom and (not phi): {_show(e)}")
        return Psi("nguarded", _atom(e[1]), _phi(e[2][1]))
    if head in ("not", "or", "exists", "and"):
        raise NotNormalFormError(f"{head} is not allowed here: {_show(e)}")
    return Psi("atom", _atom(e))


def parse_gnf(text: str) -> GNFFormula:
    """Parse, alpha-rename bound variables apart, and check guards and Booleanity."""
    root = _phi(read_sexp(text))
    f = GNFFormula(root)
    counter = itertools.count(1)
    _rename(root, {}, counter)
    _annotate(f, root, None)
    if root.free:
        raise NotNormalFormError(f"the formula has free variables {list(root.free)}")
    return f


def _rename(phi: Phi, env: dict, counter) -> None:
    for d in phi.disjuncts:
        local = dict(env)
        fresh = []
        for v in d.bound:
            nv = f"{v}_{next(counter)}"
            local[v] = nv
            fresh.append(nv)
        d.bound = tuple(fresh)
        for p in d.conj:
            p.atom = Atom(p.atom.relation, tuple(local.get(v, v) for v in p.atom.args))
            if p.sub is not None:
                _rename(p.sub, local, counter)


def _annotate(f: GNFFormula, phi: Phi, guard: Atom | None) -> None:
    phi.node = len(f.nodes)
    phi.guard = guard
    f.nodes.append(phi)
    free: set = set()
    for d in phi.disjuncts:
        vs: set = set()
        for p in d.conj:
            vs |= set(p.atom.args)
            if p.sub is not None:
                _annotate(f, p.sub, p.atom)
                missing = set(p.sub.free) - set(p.atom.args)
                if missing:
                    raise NotNormalFormError(
                        f"guard {p.atom} misses free variables {sorted(missing)} of its subformula"
                    )
        free |= vs - set(d.bound)
    phi.free = tuple(sorted(free))


# -- translation ------------------------------------------------------------


@dataclass(frozen=True)
class GNFCertificate:
    cq_rank: int
    arity: int
    injected_guards: int
    body_size: int

    @property
    def bound(self) -> int:
        return self.arity * (self.cq_rank + (1 if self.injected_guards else 0))

    def line(self) -> str:
        return (f"% body_size={self.body_size} bound={self.bound} cq_rank={self.cq_rank}"
                f" injected_guards={self.injected_guards}")


def translate_gnf(f: GNFFormula | str) -> tuple[Program, GNFCertificate]:
    if isinstance(f, str):
        f = parse_gnf(f)

    def pred(phi: Phi) -> str:
        return GOAL if phi.node == 0 else f"F_{phi.node}"

    rules = []
    injected = 0
    ext: dict = {}
    for phi in f.nodes:
        head = Atom(pred(phi), phi.free)
        for d in phi.disjuncts:
            body = []
            for p in d.conj:
                ext.setdefault(p.atom.relation, len(p.atom.args))
                body.append(Literal(p.atom))
                if p.kind == "guarded":
                    body.append(Literal(Atom(pred(p.sub), p.sub.free)))
                elif p.kind == "nguarded":
                    body.append(Literal(Atom(pred(p.sub), p.sub.free), False))
            if not _guards_head(head, body):
                # the context guard holds every free variable of this node
                body.insert(0, Literal(phi.guard))
                injected += 1
            rules.append(Rule(head, tuple(dict.fromkeys(body))))
    for name in list(ext):
        if name == GOAL or name.startswith("F_"):
            raise NotNormalFormError(f"relation name {name} is reserved")
    p = make_program(rules, ext)
    ar = max(ext.values())
    return p, GNFCertificate(f.cq_rank, ar, injected, body_size(p))


def _guards_head(head: Atom, body: list) -> bool:
    atoms = [l.atom for l in body if l.positive]
    vs = set().union(*(a.vars for a in atoms)) if atoms else set()
    if not set(head.args) <= vs:
        return False
    hv = sorted(set(head.args))
    for i, x in enumerate(hv):
        for y in hv[i + 1:]:
            if not any(x in a.vars and y in a.vars for a in atoms):
                return False
    return True


def gnf_to_cfg(f: GNFFormula | str) -> Program:
    """Nonrecursive CFG-Datalog program with one predicate per phi-node and one rule per disjunct."""
    return translate_gnf(f)[0]


# -- direct evaluation ------------------------------------------------------


def gnf_holds(f: GNFFormula | str, instance: Instance) -> bool:
    """First-order model checking of the formula, quantifiers ranging over the active domain."""
    if isinstance(f, str):
        f = parse_gnf(f)
    facts = {(x.relation, x.args) for x in instance.facts}
    dom = sorted(instance.dom)

    def phi(n: Phi, env: dict) -> bool:
        return any(disj(d, env) for d in n.disjuncts)

    def disj(d: Disjunct, env: dict) -> bool:
        for vals in itertools.product(dom, repeat=len(d.bound)):
            local = dict(env)
            local.update(zip(d.bound, vals))
            if all(psi(p, local) for p in d.conj):
                return True
        return False

    def psi(p: Psi, env: dict) -> bool:
        held = (p.atom.relation, tuple(env[v] for v in p.atom.args)) in facts
        if p.kind == "atom" or not held:
            return held
        inner = phi(p.sub, env)
        return inner if p.kind == "guarded" else not inner

    return phi(f.root, {})
