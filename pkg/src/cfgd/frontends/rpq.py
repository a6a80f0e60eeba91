"""Two-way regular path queries and strongly acyclic conjunctions of them.

Regex syntax, over relation names:

    R        letter          R-  or R⁻    inverse letter
    e f      concatenation (also ``e.f`` and ``e·f``)
    e | f    union           e*   star     e+   one or more     e?   optional
    eps      the empty word (also ``ε``)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..datalog import GOAL, Atom, Literal, Program, Rule, make_program
from ..errors import NotStronglyAcyclicError, ParseError, ProgramError
from ..relational import Instance, Signature

# -- regex syntax tree -------------------------------------------------------
# ("eps",)  ("empty",)  ("sym", rel, inverse)  ("cat", a, b)  ("alt", a, b)  ("star", a)

EPS = ("eps",)
EMPTY = ("empty",)

_TOK = re.compile(r"\s*(?:(?P<sym>[A-Za-z_][A-Za-z0-9_]*)(?P<inv>-|⁻)?|(?P<op>[()|*+?.·]|ε))")


def parse_regex(text: str):
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} in regex", 1, pos + 1)
        if m.group("sym"):
            name = m.group("sym")
            if name == "eps" and not m.group("inv"):
                toks.append(("eps",))
            else:
                toks.append(("sym", name, bool(m.group("inv"))))
        else:
            op = m.group("op")
            toks.append(("eps",) if op == "ε" else ("op", op, m.start("op")))
        pos = m.end()
    p = _RegexParser(toks)
    r = p.alt()
    if p.i != len(toks):
        raise ParseError(f"unexpected token {toks[p.i]!r} in regex", 1, None)
    return r


class _RegexParser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def is_op(self, op):
        t = self.peek()
        return t is not None and t[0] == "op" and t[1] == op

    def alt(self):
        r = self.cat()
        while self.is_op("|"):
            self.i += 1
            r = ("alt", r, self.cat())
        return r

    def cat(self):
        r = self.post()
        while True:
            if self.is_op(".") or self.is_op("·"):
                self.i += 1
                r = ("cat", r, self.post())
                continue
            t = self.peek()
            if t is not None and (t[0] in ("sym", "eps") or (t[0] == "op" and t[1] == "(")):
                r = ("cat", r, self.post())
                continue
            return r

    def post(self):
        r = self.atom()
        while True:
            if self.is_op("*"):
                r = ("star", r)
            elif self.is_op("+"):
                r = ("cat", r, ("star", r))
            elif self.is_op("?"):
                r = ("alt", r, EPS)
            else:
                return r
            self.i += 1

    def atom(self):
        t = self.peek()
        if t is None:
            raise ParseError("regex ends unexpectedly", 1, None)
        if t[0] == "sym":
            self.i += 1
            return t
        if t[0] == "eps":
            self.i += 1
            return EPS
        if t[1] == "(":
            self.i += 1
            r = self.alt()
            if not self.is_op(")"):
                raise ParseError("missing ')' in regex", 1, None)
            self.i += 1
            return r
        raise ParseError(f"unexpected {t[1]!r} in regex", 1, t[2] + 1)


def regex_letters(r) -> set:
    if r[0] == "sym":
        return {r[1]}
    if r[0] in ("cat", "alt"):
        return regex_letters(r[1]) | regex_letters(r[2])
    if r[0] == "star":
        return regex_letters(r[1])
    return set()


def regex_str(r) -> str:
    tag = r[0]
    if tag == "eps":
        return "eps"
    if tag == "empty":
        return "(empty)"
    if tag == "sym":
        return r[1] + ("-" if r[2] else "")
    if tag == "cat":
        return f"({regex_str(r[1])}·{regex_str(r[2])})"
    if tag == "alt":
        return f"({regex_str(r[1])}|{regex_str(r[2])})"
    return f"({regex_str(r[1])})*"


# -- derivative matcher (the reference for word membership) -----------------


def _nullable(r) -> bool:
    tag = r[0]
    if tag in ("eps", "star"):
        return True
    if tag in ("empty", "sym"):
        return False
    if tag == "cat":
        return _nullable(r[1]) and _nullable(r[2])
    return _nullable(r[1]) or _nullable(r[2])


def _deriv(r, a):
    tag = r[0]
    if tag in ("eps", "empty"):
        return EMPTY
    if tag == "sym":
        return EPS if (r[1], r[2]) == a else EMPTY
    if tag == "alt":
        return _alt(_deriv(r[1], a), _deriv(r[2], a))
    if tag == "star":
        return _cat(_deriv(r[1], a), r)
    left = _cat(_deriv(r[1], a), r[2])
    return _alt(left, _deriv(r[2], a)) if _nullable(r[1]) else left


def _cat(a, b):
    if a == EMPTY or b == EMPTY:
        return EMPTY
    if a == EPS:
        return b
    if b == EPS:
        return a
    return ("cat", a, b)


def _alt(a, b):
    if a == EMPTY:
        return b
    if b == EMPTY or a == b:
        return a
    return ("alt", a, b)


def regex_matches(r, word) -> bool:
    """``word`` is a sequence of (relation, inverse) letters."""
    for a in word:
        r = _deriv(r, tuple(a))
        if r == EMPTY:
            return False
    return _nullable(r)


# -- Thompson automata ------------------------------------------------------


@dataclass
class NFA:
    """Epsilon-NFA with one initial and one final state; letters are (relation, inverse)."""

    num_states: int
    initial: int
    final: int
    moves: list = field(default_factory=list)  # (src, letter or None, dst)

    def eps_closure(self, states) -> set:
        out = set(states)
        stack = list(states)
        eps: dict = {}
        for s, a, t in self.moves:
            if a is None:
                eps.setdefault(s, []).append(t)
        while stack:
            s = stack.pop()
            for t in eps.get(s, ()):
                if t not in out:
                    out.add(t)
                    stack.append(t)
        return out

    def accepts(self, word) -> bool:
        cur = self.eps_closure({self.initial})
        for a in word:
            a = tuple(a)
            nxt = {t for s, b, t in self.moves if s in cur and b == a}
            cur = self.eps_closure(nxt)
        return self.final in cur

    def reverse(self) -> "NFA":
        """Automaton reading matching paths backwards: arrows flipped, ends swapped, letters inverted."""
        moves = [(t, None if a is None else (a[0], not a[1]), s) for s, a, t in self.moves]
        return NFA(self.num_states, self.final, self.initial, moves)


def thompson(r) -> NFA:
    if isinstance(r, str):
        r = parse_regex(r)
    moves: list = []
    count = [0]

    def state():
        count[0] += 1
        return count[0] - 1

    def build(r):
        tag = r[0]
        if tag in ("eps", "empty", "sym"):
            s, t = state(), state()
            if tag == "eps":
                moves.append((s, None, t))
            elif tag == "sym":
                moves.append((s, (r[1], r[2]), t))
            return s, t
        if tag == "cat":
            s1, t1 = build(r[1])
            s2, t2 = build(r[2])
            moves.append((t1, None, s2))
            return s1, t2
        if tag == "alt":
            s, t = state(), state()
            s1, t1 = build(r[1])
            s2, t2 = build(r[2])
            moves.extend([(s, None, s1), (s, None, s2), (t1, None, t), (t2, None, t)])
            return s, t
        s, t = state(), state()
        s1, t1 = build(r[1])
        moves.extend([(s, None, s1), (t1, None, s1), (s, None, t), (t1, None, t)])
        return s, t

    s, t = build(r)
    return NFA(count[0], s, t, moves)


# -- translations -----------------------------------------------------------


def _binary_signature(r, signature) -> Signature:
    if signature is None:
        signature = Signature({x: 2 for x in sorted(regex_letters(r))})
    elif isinstance(signature, dict):
        signature = Signature(signature)
    for rel, ar in signature.relations.items():
        if ar != 2:
            raise ProgramError(f"path queries need binary relations, {rel} has arity {ar}")
    missing = regex_letters(r) - set(signature.relations)
    if missing:
        raise ProgramError(f"regex letters {sorted(missing)} are not in the signature")
    return signature


def _edge_rules(nfa: NFA, pred):
    """Transition rules P_q' <- P_q, letter for one automaton; ``pred(q)`` names its unary predicates."""
    rules = []
    for s, a, t in nfa.moves:
        if a is None:
            rules.append(Rule(Atom(pred(t), ("x",)), (Literal(Atom(pred(s), ("x",))),)))
        elif not a[1]:
            rules.append(Rule(Atom(pred(t), ("y",)), (Literal(Atom(pred(s), ("x",))), Literal(Atom(a[0], ("x", "y"))))))
        else:
            rules.append(Rule(Atom(pred(t), ("y",)), (Literal(Atom(pred(s), ("x",))), Literal(Atom(a[0], ("y", "x"))))))
    return rules


def _domain_rules(head: str, signature: Signature):
    """head(x) for every element of the active domain."""
    rules = []
    for rel in sorted(signature.relations):
        rules.append(Rule(Atom(head, ("x",)), (Literal(Atom(rel, ("x", "y"))),)))
        rules.append(Rule(Atom(head, ("y",)), (Literal(Atom(rel, ("x", "y"))),)))
    return rules


def rpq_to_cfg(r, signature: Signature | dict | None = None) -> Program:
    """Monadic program for the Boolean 2RPQ ``r``: one unary predicate per Thompson state.

    ``signature`` defaults to the letters of the regex; it matters when the
    language contains the empty word, since every domain element then matches.
    """
    if isinstance(r, str):
        r = parse_regex(r)
    sig = _binary_signature(r, signature)
    nfa = thompson(r)

    def pred(q):
        return f"Q_{q}"

    rules = _domain_rules(pred(nfa.initial), sig)
    rules += _edge_rules(nfa, pred)
    rules.append(Rule(Atom(GOAL, ()), (Literal(Atom(pred(nfa.final), ("x",))),)))
    return make_program(rules, sig)


@dataclass
class SAC2RPQ:
    """A conjunction of 2RPQ atoms r(z, z'); each edge is (z, z', regex)."""

    edges: list

    def __post_init__(self):
        self.edges = [(str(z), str(z2), parse_regex(r) if isinstance(r, str) else r) for z, z2, r in self.edges]

    @property
    def variables(self) -> list:
        return sorted({v for z, z2, _ in self.edges for v in (z, z2)})

    def check(self) -> None:
        seen = set()
        parent = {v: v for v in self.variables}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for z, z2, _ in self.edges:
            if z == z2:
                raise NotStronglyAcyclicError(f"self-loop on {z}")
            key = frozenset((z, z2))
            if key in seen:
                raise NotStronglyAcyclicError(f"several edges between {z} and {z2}")
            seen.add(key)
            a, b = find(z), find(z2)
            if a == b:
                raise NotStronglyAcyclicError(f"the edge {z} - {z2} closes a cycle")
            parent[a] = b

    def letters(self) -> set:
        return set().union(*(regex_letters(r) for _, _, r in self.edges)) if self.edges else set()


def parse_sac2rpq(text: str) -> SAC2RPQ:
    """One edge per line: ``z z' <regex>`` (``%`` comments)."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 2)
        if len(parts) != 3:
            raise ParseError("expected: <var> <var> <regex>", lineno, 1)
        edges.append((parts[0], parts[1], parse_regex(parts[2])))
    return SAC2RPQ(edges)


def _conjoin(head: str, parts: list, arg: tuple, prefix: str) -> list:
    """head(arg) <- parts[0](arg), ..., parts[-1](arg), chained two atoms at a time."""
    if len(parts) == 1:
        return [Rule(Atom(head, arg), (Literal(Atom(parts[0], arg)),))]
    rules = []
    names = [f"{prefix}_{i}" for i in range(len(parts))]
    rules.append(Rule(Atom(names[-1], arg), (Literal(Atom(parts[-1], arg)),)))
    for i in range(len(parts) - 2, -1, -1):
        rules.append(Rule(Atom(names[i], arg), (Literal(Atom(names[i + 1], arg)), Literal(Atom(parts[i], arg)))))
    rules.append(Rule(Atom(head, arg), (Literal(Atom(names[0], arg)),)))
    return rules


def sac2rpq_to_cfg(q: SAC2RPQ, signature: Signature | dict | None = None) -> Program:
    """Monadic program of body size <= 4 for a Boolean SAC2RPQ."""
    q.check()
    if not q.edges:
        raise ProgramError("a SAC2RPQ needs at least one edge")
    probe = ("alt", q.edges[0][2], q.edges[0][2])
    for _, _, r in q.edges[1:]:
        probe = ("alt", probe, r)
    sig = _binary_signature(probe, signature)
    adj: dict = {v: [] for v in q.variables}
    for i, (z, z2, r) in enumerate(q.edges):
        adj[z].append((z2, i))
        adj[z2].append((z, i))
    rules: list = []
    seen: set = set()
    goals = []
    for start in q.variables:
        if start in seen:
            continue
        # root each component at its smallest variable
        comp = len(goals)
        order, par = [], {start: None}
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            order.append(v)
            for w, i in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    par[w] = (v, i)
                    stack.append(w)
        kids: dict = {v: [] for v in order}
        for v in order:
            if par[v] is not None:
                kids[par[v][0]].append(v)
        node = {v: j for j, v in enumerate(order)}

        def p_at(v):
            return f"N{comp}_{node[v]}"

        for v in reversed(order):
            if not kids[v]:
                rules += _domain_rules(p_at(v), sig)
            else:
                parts = [f"E{comp}_{node[v]}_{node[c]}" for c in kids[v]]
                rules += _conjoin(p_at(v), parts, ("x",), f"C{comp}_{node[v]}")
            if par[v] is not None:
                up, i = par[v]
                z, z2, r = q.edges[i]
                nfa = thompson(r)
                if z == up:
                    # the regex reads paths from the upper variable down to v
                    nfa = nfa.reverse()
                tag = f"A{comp}_{node[v]}"

                def pred(s, tag=tag):
                    return f"{tag}_{s}"

                rules.append(Rule(Atom(pred(nfa.initial), ("x",)), (Literal(Atom(p_at(v), ("x",))),)))
                rules += _edge_rules(nfa, pred)
                rules.append(Rule(Atom(f"E{comp}_{node[up]}_{node[v]}", ("x",)),
                                  (Literal(Atom(pred(nfa.final), ("x",))),)))
        goal_c = f"G{comp}"
        rules.append(Rule(Atom(goal_c, ()), (Literal(Atom(p_at(start), ("x",))),)))
        goals.append(goal_c)
    rules += _conjoin(GOAL, goals, (), "GC")
    return make_program(rules, sig)


# -- oracles ----------------------------------------------------------------


def rpq_pairs(nfa: NFA, instance: Instance, sources=None) -> set:
    """All (a, b) joined by a path whose label the automaton accepts (product reachability)."""
    step: dict = {}
    for f in instance.facts:
        if len(f.args) != 2:
            continue
        a, b = f.args
        step.setdefault(a, []).append(((f.relation, False), b))
        step.setdefault(b, []).append(((f.relation, True), a))
    by_src: dict = {}
    for s, a, t in nfa.moves:
        by_src.setdefault(s, []).append((a, t))
    dom = sorted(instance.dom) if sources is None else list(sources)
    out = set()
    for a in dom:
        seen = {(a, nfa.initial)}
        stack = [(a, nfa.initial)]
        while stack:
            e, s = stack.pop()
            if s == nfa.final:
                out.add((a, e))
            for letter, t in by_src.get(s, ()):
                if letter is None:
                    nxt = [(e, t)]
                else:
                    nxt = [(e2, t) for l2, e2 in step.get(e, ()) if l2 == letter]
                for x in nxt:
                    if x not in seen:
                        seen.add(x)
                        stack.append(x)
    return out


def rpq_holds(r, instance: Instance) -> bool:
    if isinstance(r, str):
        r = parse_regex(r)
    return bool(rpq_pairs(thompson(r), instance))


def sac2rpq_holds(q: SAC2RPQ, instance: Instance) -> bool:
    """Tree-shaped join of the per-edge reachability relations."""
    q.check()
    dom = sorted(instance.dom)
    rels = []
    for z, z2, r in q.edges:
        rels.append((z, z2, rpq_pairs(thompson(r), instance)))
    adj: dict = {v: [] for v in q.variables}
    for z, z2, pairs in rels:
        adj[z].append((z2, pairs, False))
        adj[z2].append((z, pairs, True))
    seen: set = set()
    for start in q.variables:
        if start in seen:
            continue
        order, par = [], {start: None}
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            order.append(v)
            for w, pairs, flip in adj[v]:
                if w not in seen:
                    seen.add(w)
                    par[w] = (v, pairs, flip)
                    stack.append(w)
        ok: dict = {v: set(dom) for v in order}
        for v in reversed(order):
            if par[v] is None:
                continue
            up, pairs, flip = par[v]
            # pairs are (z, z') with z = up unless flipped
            good = {(b if flip else a) for a, b in pairs if (a if flip else b) in ok[v]}
            ok[up] &= good
        if not ok[start]:
            return False
    return True
