"""Stratified isotropic alternating two-way automata and the compilation of
guarded-negation CFG-Datalog programs into them.

Labels of Gamma^k_sigma are pairs ``(d, s)``: ``d`` is a bitmask over the
names ``0 .. 2k+1`` and ``s`` is ``None`` or ``(relation, names)``.  Formulas
are hashable tuples:

    ("true",)  ("false",)  ("lit", q)  ("nlit", q)  ("and", (f, ...))  ("or", (f, ...))

where ``q`` is an integer state id.  Transition formulas are computed on
demand and memoized per (state, label).
"""

from __future__ import annotations

import json
from itertools import combinations, product
from typing import Callable, Iterable

from .datalog import GOAL, Program, body_size, check_cfg, check_gn, stratify
from .errors import AlphabetMismatchError, NotCFGError, UnguardedNegationError
from .treewidth import mask_names, name_str

TRUE = ("true",)
FALSE = ("false",)


def lit(q: int):
    return ("lit", q)


def nlit(q: int):
    return ("nlit", q)


def f_or(parts: Iterable) -> tuple:
    out, seen = [], set()
    for f in parts:
        if f is TRUE or f == TRUE:
            return TRUE
        if f == FALSE:
            continue
        sub = f[1] if f[0] == "or" else (f,)
        for g in sub:
            if g not in seen:
                seen.add(g)
                out.append(g)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return ("or", tuple(out))


def f_and(parts: Iterable) -> tuple:
    out, seen = [], set()
    for f in parts:
        if f == FALSE:
            return FALSE
        if f == TRUE:
            continue
        sub = f[1] if f[0] == "and" else (f,)
        for g in sub:
            if g not in seen:
                seen.add(g)
                out.append(g)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return ("and", tuple(out))


def literals(f) -> Iterable[tuple]:
    """Yield the ("lit", q) / ("nlit", q) leaves of a formula."""
    stack = [f]
    while stack:
        g = stack.pop()
        if g[0] in ("lit", "nlit"):
            yield g
        elif g[0] in ("and", "or"):
            stack.extend(g[1])


def eval_formula(f, pos: Callable[[int], bool], neg: Callable[[int], bool]) -> bool:
    """``pos(q)``/``neg(q)`` give the truth of a positive / negative leaf."""
    t = f[0]
    if t == "true":
        return True
    if t == "false":
        return False
    if t == "lit":
        return pos(f[1])
    if t == "nlit":
        return neg(f[1])
    if t == "and":
        return all(eval_formula(g, pos, neg) for g in f[1])
    return any(eval_formula(g, pos, neg) for g in f[1])


def formula_to_json(f):
    t = f[0]
    if t in ("true", "false"):
        return [t]
    if t in ("lit", "nlit"):
        return [t, f[1]]
    return [t] + [formula_to_json(g) for g in f[1]]


def strip_label(label):
    return (label[0], None)


# ---------------------------------------------------------------------------
# automata


class SATWA:
    """Interface: state ids ``0 .. n-1`` (possibly growing lazily)."""

    k: int
    initial: int

    def delta(self, q: int, label) -> tuple:
        raise NotImplementedError

    def stratum(self, q: int) -> int:
        raise NotImplementedError

    def describe(self, q: int) -> str:
        return str(q)

    @property
    def num_states(self) -> int:
        raise NotImplementedError

    def check_alphabet(self, k: int, signature) -> None:
        if k > self.k:
            raise AlphabetMismatchError(f"tree encoding has width parameter {k} > automaton's {self.k}")


class ExplicitSATWA(SATWA):
    """A hand-written automaton; ``table`` maps ``(state, label)`` or ``state``
    to a formula, or is a callable ``(state, label) -> formula``."""

    def __init__(self, num_states: int, initial: int, strata, table, k: int = 0):
        self._n = num_states
        self.initial = initial
        self._strata = list(strata)
        self._table = table
        self.k = k

    def delta(self, q, label):
        if callable(self._table):
            return self._table(q, label)
        if (q, label) in self._table:
            return self._table[(q, label)]
        return self._table.get(q, FALSE)

    def stratum(self, q):
        return self._strata[q]

    @property
    def num_states(self):
        return self._n

    def check_alphabet(self, k, signature):
        return None


def hom(y: tuple, x: tuple, nu: dict):
    """The homomorphism from ``y`` onto ``nu(x)``, or None if repeats clash."""
    if len(y) != len(x):
        raise ValueError("tuples differ in length")
    out: dict = {}
    for yv, xv in zip(y, x):
        a = nu[xv]
        if out.setdefault(yv, a) != a:
            return None
    return out


class _RuleInfo:
    __slots__ = ("index", "head_rel", "head", "nvars", "lits", "lit_vars", "varsA", "nlits")

    def __init__(self, index, rule, prog):
        self.index = index
        vars_ = sorted(rule.vars)
        vid = {v: i for i, v in enumerate(vars_)}
        self.nvars = len(vars_)
        self.head_rel = rule.head.relation
        self.head = tuple(vid[v] for v in rule.head.args)
        self.lits = tuple(
            (l.positive, l.atom.relation, tuple(vid[v] for v in l.atom.args), prog.is_intensional(l.atom.relation))
            for l in rule.body
        )
        self.nlits = len(self.lits)
        lv = []
        for _, _, args, _ in self.lits:
            m = 0
            for v in args:
                m |= 1 << v
            lv.append(m)
        self.lit_vars = tuple(lv)
        self.varsA = [0] * (1 << self.nlits)
        for mask in range(1, 1 << self.nlits):
            m = 0
            for i in range(self.nlits):
                if mask >> i & 1:
                    m |= lv[i]
            self.varsA[mask] = m


def _pattern(args: tuple):
    """Canonical shape of an argument tuple: variables renamed by first occurrence."""
    first: dict = {}
    pat = tuple(first.setdefault(v, len(first)) for v in args)
    distinct = tuple(sorted(first, key=first.get))
    return pat, distinct


class CompiledSATWA(SATWA):
    """The automaton A_P for a guarded-negation CFG-Datalog program.

    States (interned to ids on first use):

    * ``("ext", S, pattern, vals)``: find an ``S``-fact matching a partial valuation;
    * ``("int", R, a)``: derive ``R(a)`` for a tuple of names ``a``;
    * ``("rule", r, A, vals)``: satisfy the literal subset ``A`` (bitmask) of rule ``r``.

    ``vals`` use ``-1`` for undefined variables.
    """

    def __init__(self, program: Program, k: int, strata: dict | None = None):
        rep = check_cfg(program)
        if not rep.ok:
            raise NotCFGError(str(rep))
        rep = check_gn(program)
        if not rep.ok:
            raise UnguardedNegationError(str(rep))
        self.program = program
        self.k = k
        self.names = 2 * k + 2
        self.strata = dict(strata) if strata is not None else stratify(program)
        self.rules = [_RuleInfo(i, r, program) for i, r in enumerate(program.rules)]
        self.rules_by_head: dict = {}
        for ri in self.rules:
            self.rules_by_head.setdefault(ri.head_rel, []).append(ri)
        self._states: list = []
        self._ids: dict = {}
        self._strat: list = []
        self._memo: dict = {}
        self.initial = self.intern(("int", GOAL, ()))

    # -- states ------------------------------------------------------------

    def intern(self, key) -> int:
        sid = self._ids.get(key)
        if sid is None:
            sid = len(self._states)
            self._ids[key] = sid
            self._states.append(key)
            if key[0] == "ext":
                s = 0
            elif key[0] == "int":
                s = self.strata[key[1]]
            else:
                s = self.strata[self.rules[key[1]].head_rel]
            self._strat.append(s)
        return sid

    def state(self, q: int):
        return self._states[q]

    def stratum(self, q: int) -> int:
        return self._strat[q]

    @property
    def num_states(self) -> int:
        return len(self._states)

    @property
    def num_strata(self) -> int:
        return max(self._strat) + 1

    def describe(self, q: int) -> str:
        st = self._states[q]

        def v(x):
            return "?" if x < 0 else name_str(x)

        if st[0] == "ext":
            return f"ext {st[1]}{st[2]}[{','.join(map(v, st[3]))}]"
        if st[0] == "int":
            return f"{st[1]}({','.join(map(name_str, st[2]))})"
        ri = self.rules[st[1]]
        return f"rule{st[1]}[A={st[2]:b}; {','.join(map(v, st[3]))}] ({ri.head_rel})"

    def check_alphabet(self, k, signature) -> None:
        super().check_alphabet(k, signature)
        for rel, ar in self.program.extensional.relations.items():
            if rel in signature and signature.arity(rel) != ar:
                raise AlphabetMismatchError(f"relation {rel}: program arity {ar}, encoding arity {signature.arity(rel)}")

    # -- transitions -------------------------------------------------------

    def delta(self, q: int, label) -> tuple:
        key = (q, label)
        f = self._memo.get(key)
        if f is None:
            f = self._delta(q, label)
            self._memo[key] = f
        return f

    def _delta(self, q, label):
        st = self._states[q]
        d, s = label
        kind = st[0]
        if kind == "ext":
            _, rel, pat, vals = st
            if any(a >= 0 and not d >> a & 1 for a in vals):
                return FALSE
            if -1 in vals:
                return f_or([lit(q)] + [
                    lit(self.intern(("ext", rel, pat, vals[:j] + (a,) + vals[j + 1:])))
                    for j, x in enumerate(vals) if x < 0 for a in mask_names(d)
                ])
            if s is not None and s[0] == rel and s[1] == tuple(vals[p] for p in pat):
                return TRUE
            return lit(q)
        if kind == "int":
            _, rel, a = st
            if any(not d >> x & 1 for x in a):
                return FALSE
            parts = []
            for ri in self.rules_by_head.get(rel, ()):
                vals = [-1] * ri.nvars
                ok = True
                for v, x in zip(ri.head, a):
                    if vals[v] == -1:
                        vals[v] = x
                    elif vals[v] != x:
                        ok = False
                        break
                if ok:
                    full = (1 << ri.nlits) - 1
                    parts.append(lit(self.intern(("rule", ri.index, full, tuple(vals)))))
            return f_or(parts)
        return self._delta_rule(q, st, d)

    def _delta_rule(self, q, st, d):
        _, r, A, vals = st
        ri = self.rules[r]
        va = ri.varsA[A]
        for v in range(ri.nvars):
            if va >> v & 1 and vals[v] >= 0 and not d >> vals[v] & 1:
                return FALSE
        names = mask_names(d)
        if A & (A - 1):
            parts = [lit(q)]
            low = A & -A
            rest = A ^ low
            # A1 always holds the lowest literal, so each unordered split appears once
            sub = rest
            while True:
                a1 = low | sub
                a2 = A ^ a1
                if a2:
                    shared = ri.varsA[a1] & ri.varsA[a2]
                    undef = [v for v in range(ri.nvars) if shared >> v & 1 and vals[v] < 0]
                    for choice in product(names, repeat=len(undef)):
                        nv = list(vals)
                        for v, x in zip(undef, choice):
                            nv[v] = x
                        parts.append(f_and([
                            lit(self._rule_state(ri, a1, nv)),
                            lit(self._rule_state(ri, a2, nv)),
                        ]))
                if sub == 0:
                    break
                sub = (sub - 1) & rest
            return f_or(parts)
        i = A.bit_length() - 1
        positive, rel, args, is_int = ri.lits[i]
        if positive and not is_int:
            pat, distinct = _pattern(args)
            return lit(self.intern(("ext", rel, pat, tuple(vals[v] for v in distinct))))
        undef = sorted({v for v in args if vals[v] < 0})
        if not undef:
            target = self.intern(("int", rel, tuple(vals[v] for v in args)))
            return lit(target) if positive else nlit(target)
        if not positive:
            # guardedness leaves at most one unvalued variable in a negative literal
            assert len(undef) == 1, "negative literal reached with several undefined variables"
        # fill undefined variables from the current bag, moving around as needed
        parts = [lit(q)]
        for v in undef:
            for a in names:
                nv = list(vals)
                nv[v] = a
                parts.append(lit(self._rule_state(ri, A, nv)))
        return f_or(parts)

    def _rule_state(self, ri, A, vals):
        va = ri.varsA[A]
        key = tuple(x if va >> v & 1 else -1 for v, x in enumerate(vals))
        return self.intern(("rule", ri.index, A, key))


class LiftedSATWA(SATWA):
    """Runs over labels ``((d, s), b)``; annotation 0 removes the node's fact."""

    def __init__(self, base: SATWA):
        self.base = base
        self.k = base.k

    @property
    def initial(self):
        return self.base.initial

    def delta(self, q, label):
        inner, b = label
        return self.base.delta(q, inner if b else strip_label(inner))

    def stratum(self, q):
        return self.base.stratum(q)

    def describe(self, q):
        return self.base.describe(q)

    @property
    def num_states(self):
        return self.base.num_states

    def check_alphabet(self, k, signature):
        self.base.check_alphabet(k, signature)


_compile_cache: dict = {}


def compile(program: Program, k: int) -> CompiledSATWA:
    """Compile a guarded-negation CFG-Datalog program for treewidth ``k``.

    Results are cached per (program, k) so that transition memos are shared.
    """
    key = (program, k)
    a = _compile_cache.get(key)
    if a is None:
        if body_size(program) > 12:
            import warnings
            warnings.warn(f"body size {body_size(program)} > 12: the automaton may be very large")
        a = CompiledSATWA(program, k)
        if len(_compile_cache) > 64:
            _compile_cache.clear()
        _compile_cache[key] = a
    return a


def lift(a: SATWA) -> LiftedSATWA:
    return LiftedSATWA(a)


def satwa_accepts(a: SATWA, enc) -> bool:
    """Acceptance on a tree encoding, via the provenance cycluit at all-ones."""
    from .cycluit import build_provenance_python, eval_stratified

    a.check_alphabet(enc.k, enc.signature)
    c = build_provenance_python(lift(a) if not isinstance(a, LiftedSATWA) else a, enc)
    return bool(eval_stratified(c, None)[0])


# ---------------------------------------------------------------------------
# inspection


def all_labels(k: int, signature, max_d: int | None = None) -> list:
    """Every label of Gamma^k_sigma (small k and signatures only)."""
    nd = 2 * k + 2
    out = []
    for size in range(0, min(k + 1, nd) + 1):
        for combo in combinations(range(nd), size):
            d = 0
            for a in combo:
                d |= 1 << a
            out.append((d, None))
            for rel, ar in sorted(signature.relations.items()):
                for args in product(combo, repeat=ar):
                    out.append((d, (rel, args)))
    return out


def enumerate_states(a: SATWA, labels: list, limit: int = 200000) -> list:
    """Close the state set from the initial state under ``labels``."""
    seen = {a.initial}
    todo = [a.initial]
    while todo:
        q = todo.pop()
        for l in labels:
            for leaf in literals(a.delta(q, l)):
                if leaf[1] not in seen:
                    seen.add(leaf[1])
                    todo.append(leaf[1])
                    if len(seen) > limit:
                        raise RuntimeError("state enumeration limit exceeded")
    return sorted(seen)


def check_satwa_stratification(a: SATWA, labels: list) -> bool:
    for q in enumerate_states(a, labels):
        s = a.stratum(q)
        for l in labels:
            for leaf in literals(a.delta(q, l)):
                t = a.stratum(leaf[1])
                if leaf[0] == "lit" and t > s:
                    return False
                if leaf[0] == "nlit" and t >= s:
                    return False
    return True


def label_to_json(label):
    d, s = label
    return {
        "d": [name_str(x) for x in mask_names(d)],
        "fact": None if s is None else {"relation": s[0], "args": [name_str(x) for x in s[1]]},
    }


def export_satwa(a: SATWA, labels: list) -> str:
    """Eager export: states, initial state, strata and non-false transitions."""
    states = enumerate_states(a, labels)
    trans = []
    for q in states:
        for l in labels:
            f = a.delta(q, l)
            if f != FALSE:
                trans.append([q, label_to_json(l), formula_to_json(f)])
    doc = {
        "states": [{"id": q, "name": a.describe(q)} for q in states],
        "initial": a.initial,
        "stratification": {str(q): a.stratum(q) for q in states},
        "transitions": trans,
    }
    return json.dumps(doc, sort_keys=True)
