"""Cyclic Boolean circuits (cycluits): evaluation, stratification and the
provenance construction for SATWAs on trees.

Gates are dense ints. Types are INP, AND, OR and NOT; each gate's inputs
are kept in CSR form (``indptr``/``indices``).
"""

from __future__ import annotations

import json
from typing import Iterable

import numba as nb
import numpy as np

from ._graph import path_within, tarjan_scc
from .satwa import FALSE, literals
from .errors import AlphabetMismatchError, CfgdError, NegationCycleError, NotMonotoneError

INP, AND, OR, NOT = 0, 1, 2, 3
TYPE_NAMES = ("inp", "and", "or", "not")
_TYPE_OF = {n: i for i, n in enumerate(TYPE_NAMES)}


class Cycluit:
    """A cycluit with gate types, inputs in CSR form, an output gate, optional
    labels for input gates and an optional stratification."""

    def __init__(self, types, indptr, indices, output: int, labels: dict | None = None, strata=None):
        self.types = np.asarray(types, dtype=np.int8)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        self.output = int(output)
        self.labels = dict(labels or {})
        self.strata = None if strata is None else np.asarray(strata, dtype=np.int32)
        self._succ = None
        n = len(self.types)
        if len(self.indptr) != n + 1:
            raise CfgdError("indptr must have one entry per gate plus one")
        if n and not 0 <= self.output < n:
            raise CfgdError("output gate out of range")
        fanin = np.diff(self.indptr)
        if np.any(fanin[self.types == INP] != 0):
            raise CfgdError("input gates cannot have incoming wires")
        if np.any(fanin[self.types == NOT] != 1):
            raise CfgdError("NOT gates need exactly one input")

    @classmethod
    def from_lists(cls, types, inputs, output, labels=None, strata=None):
        types = [(_TYPE_OF[t] if isinstance(t, str) else t) for t in types]
        indptr = np.zeros(len(types) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(x) for x in inputs]) if inputs else []
        flat = [g for xs in inputs for g in xs]
        return cls(types, indptr, np.asarray(flat, dtype=np.int32), output, labels, strata)

    def __len__(self):
        return len(self.types)

    @property
    def num_wires(self) -> int:
        return len(self.indices)

    def inputs_of(self, g: int) -> np.ndarray:
        return self.indices[self.indptr[g]:self.indptr[g + 1]]

    @property
    def input_gates(self) -> np.ndarray:
        return np.flatnonzero(self.types == INP)

    def successors(self):
        """(indptr, indices) of the transposed wire graph, cached."""
        if self._succ is None:
            self._succ = _transpose(len(self.types), self.indptr, self.indices)
        return self._succ

    def input_lists(self) -> list[list[int]]:
        ip, ix = self.indptr, self.indices
        return [ix[ip[g]:ip[g + 1]].tolist() for g in range(len(self.types))]

    def is_monotone(self) -> bool:
        return not np.any(self.types == NOT)

    def __eq__(self, other):
        return (isinstance(other, Cycluit) and self.output == other.output
                and np.array_equal(self.types, other.types) and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices) and self.labels == other.labels)

    def __repr__(self):
        return f"Cycluit({len(self.types)} gates, {self.num_wires} wires)"


def _transpose(n, indptr, indices):
    dst = np.repeat(np.arange(n, dtype=np.int32), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    sindices = dst[order].astype(np.int32)
    counts = np.bincount(indices, minlength=n) if len(indices) else np.zeros(n, dtype=np.int64)
    sptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=sptr[1:])
    return sptr, sindices


def _true_inputs(c: Cycluit, valuation) -> np.ndarray:
    """Normalize a valuation into a 0/1 array over all gates (inputs only)."""
    val = np.zeros(len(c.types), dtype=np.uint8)
    inp = c.types == INP
    if valuation is None:
        val[inp] = 1
    elif isinstance(valuation, dict):
        for g, b in valuation.items():
            if b:
                val[g] = 1
    elif isinstance(valuation, np.ndarray) and len(valuation) == len(c.types):
        val[:] = valuation.astype(bool)
    else:
        for g in valuation:
            val[g] = 1
    val[~inp] = 0
    return val


# ---------------------------------------------------------------------------
# monotone evaluation


def eval_monotone_naive(c: Cycluit, valuation) -> frozenset:
    """Naive least fixpoint: add OR gates with a true input and AND gates
    whose inputs are all true until nothing changes."""
    if not c.is_monotone():
        raise NotMonotoneError("cycluit contains NOT gates")
    ins = c.input_lists()
    types = c.types.tolist()
    val = _true_inputs(c, valuation)
    prev = None
    cur = frozenset(np.flatnonzero(val).tolist())
    while cur != prev:
        prev = cur
        new = set(prev)
        for g, t in enumerate(types):
            if t == OR and any(x in prev for x in ins[g]):
                new.add(g)
            elif t == AND and all(x in prev for x in ins[g]):
                new.add(g)
        cur = frozenset(new)
    return cur


def eval_monotone_linear(c: Cycluit, valuation, trace: list | None = None) -> frozenset:
    """Worklist evaluation with AND fan-in counters; the worklist is a stack.

    If ``trace`` is given, gates are appended in the order they become true.
    """
    if not c.is_monotone():
        raise NotMonotoneError("cycluit contains NOT gates")
    types = c.types.tolist()
    sptr, sidx = c.successors()
    sptr = sptr.tolist()
    sidx = sidx.tolist()
    fanin = np.diff(c.indptr).tolist()
    M = [fanin[g] if t == AND else 0 for g, t in enumerate(types)]
    val = _true_inputs(c, valuation)
    Q = np.flatnonzero(val).tolist() + [g for g, t in enumerate(types) if t == AND and M[g] == 0]
    S = bytearray(len(types))
    while Q:
        g = Q.pop()
        if S[g]:
            continue
        S[g] = 1
        if trace is not None:
            trace.append(g)
        for j in range(sptr[g], sptr[g + 1]):
            h = sidx[j]
            t = types[h]
            if t == OR:
                Q.append(h)
            elif t == AND:
                M[h] -= 1
                if M[h] == 0:
                    Q.append(h)
    return frozenset(g for g in range(len(types)) if S[g])


# ---------------------------------------------------------------------------
# stratification


def stratify_cycluit(c: Cycluit, method: str = "scc") -> np.ndarray:
    """A stratification function, or NegationCycleError with a witness cycle.

    ``method="scc"`` numbers the SCCs in topological order (inputs merged
    into stratum 0); ``method="compact"`` uses the fewest strata, counting
    NOT gates along paths.
    """
    n = len(c.types)
    sptr, sidx = c.successors()
    succ = [sidx[sptr[g]:sptr[g + 1]].tolist() for g in range(n)]
    comp = tarjan_scc(n, succ)
    types = c.types
    for g in np.flatnonzero(types == NOT).tolist():
        x = int(c.indices[c.indptr[g]])
        if comp[x] == comp[g]:
            members = {v for v in range(n) if comp[v] == comp[g]}
            back = [g] if x == g else path_within(succ, g, x, members)
            raise NegationCycleError(back + [g] if x != g else [g, g])
    ncomp = max(comp) + 1 if n else 0
    # tarjan ids: successors first, so topological index = ncomp - 1 - id
    comp = np.asarray(comp, dtype=np.int64)
    topo = ncomp - 1 - comp
    is_inp = types == INP
    strata = np.zeros(n, dtype=np.int32)
    if method == "scc":
        non_inp_comps = np.unique(topo[~is_inp])
        rank = np.full(ncomp, -1, dtype=np.int64)
        rank[non_inp_comps] = np.arange(1, len(non_inp_comps) + 1)
        strata[~is_inp] = rank[topo[~is_inp]]
        return strata
    if method != "compact":
        raise ValueError(f"unknown method {method!r}")
    # levels over the condensation, processed in topological order
    order = np.argsort(topo, kind="stable")
    level = np.zeros(ncomp, dtype=np.int64)
    has_not = np.zeros(ncomp, dtype=bool)
    has_not[topo[types == NOT]] = True
    for g in order.tolist():
        t = topo[g]
        if is_inp[g]:
            continue
        lv = max(level[t], 1)
        for x in c.inputs_of(g).tolist():
            tx = topo[x]
            if tx == t:
                continue
            lv = max(lv, level[tx] + (1 if types[g] == NOT else 0))
        level[t] = lv
    strata[~is_inp] = level[topo[~is_inp]]
    return strata


def check_stratification(c: Cycluit, strata) -> bool:
    strata = np.asarray(strata)
    if len(strata) != len(c.types):
        return False
    is_inp = c.types == INP
    if np.any((strata == 0) != is_inp):
        return False
    dst = np.repeat(np.arange(len(c.types)), np.diff(c.indptr))
    src = c.indices
    if np.any(strata[src] > strata[dst]):
        return False
    neg = c.types[dst] == NOT
    return not np.any(strata[src][neg] >= strata[dst][neg])


# ---------------------------------------------------------------------------
# stratified evaluation (numba)


@nb.njit(cache=True)
def _eval_kernel(types, indptr, indices, sptr, sidx, strata, order, sstart, val):
    n = len(types)
    M = np.zeros(n, dtype=np.int64)
    pending = np.zeros(n, dtype=np.uint8)
    for g in range(n):
        if types[g] == 1:
            M[g] = indptr[g + 1] - indptr[g]
    stack = np.empty(max(len(sidx) + n, 1), dtype=np.int64)
    nstrata = len(sstart) - 1
    for s in range(nstrata):
        top = 0
        for i in range(sstart[s], sstart[s + 1]):
            g = order[i]
            t = types[g]
            if t == 0:
                if val[g]:
                    val[g] = 0
                    stack[top] = g
                    top += 1
            elif t == 1:
                if M[g] == 0:
                    stack[top] = g
                    top += 1
            elif t == 2:
                if pending[g]:
                    stack[top] = g
                    top += 1
            else:
                if val[indices[indptr[g]]] == 0:
                    stack[top] = g
                    top += 1
        while top > 0:
            top -= 1
            g = stack[top]
            if val[g]:
                continue
            val[g] = 1
            for j in range(sptr[g], sptr[g + 1]):
                h = sidx[j]
                th = types[h]
                same = strata[h] == s
                if th == 2:
                    if same:
                        stack[top] = h
                        top += 1
                    else:
                        pending[h] = 1
                elif th == 1:
                    M[h] -= 1
                    if same and M[h] == 0:
                        stack[top] = h
                        top += 1
    return val


def _prepare(c: Cycluit, strata):
    if strata is None:
        strata = c.strata if c.strata is not None else stratify_cycluit(c)
    strata = np.asarray(strata, dtype=np.int64)
    # compress stratum values so the kernel loops only over used strata
    uniq, dense = np.unique(strata, return_inverse=True)
    order = np.argsort(dense, kind="stable")
    counts = np.bincount(dense, minlength=len(uniq))
    sstart = np.zeros(len(uniq) + 1, dtype=np.int64)
    np.cumsum(counts, out=sstart[1:])
    sptr, sidx = c.successors()
    return dense.astype(np.int64), order.astype(np.int64), sstart, sptr, sidx


def eval_stratified(c: Cycluit, valuation=None, strata=None):
    """Return (value of the output gate, 0/1 array over all gates).

    ``valuation`` is None (all inputs true), a dict gate -> bool, an
    iterable of true input gates, or a 0/1 array over all gates.
    """
    dense, order, sstart, sptr, sidx = _prepare(c, strata)
    val = _true_inputs(c, valuation)
    if len(c.types) == 0:
        return False, val
    _eval_kernel(c.types, c.indptr, c.indices, sptr, sidx, dense, order, sstart, val)
    return bool(val[c.output]), val


@nb.njit(cache=True)
def _eval_many(types, indptr, indices, sptr, sidx, strata, order, sstart, inputs, rows, output):
    n = len(types)
    out = np.zeros(rows.shape[0], dtype=np.uint8)
    for r in range(rows.shape[0]):
        val = np.zeros(n, dtype=np.uint8)
        for j in range(len(inputs)):
            val[inputs[j]] = rows[r, j]
        _eval_kernel(types, indptr, indices, sptr, sidx, strata, order, sstart, val)
        out[r] = val[output]
    return out


def eval_many(c: Cycluit, inputs, rows, strata=None) -> np.ndarray:
    """Evaluate the output under many valuations; ``rows[r, j]`` is the value of gate ``inputs[j]``."""
    dense, order, sstart, sptr, sidx = _prepare(c, strata)
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    inputs = np.asarray(inputs, dtype=np.int64)
    if len(c.types) == 0:
        return np.zeros(rows.shape[0], dtype=np.uint8)
    return _eval_many(c.types, c.indptr, c.indices, sptr, sidx, dense, order, sstart, inputs, rows, c.output)


# ---------------------------------------------------------------------------
# serialization


def export_cycluit(c: Cycluit, fmt: str = "json") -> str:
    if fmt == "json":
        gates = []
        for g in range(len(c.types)):
            rec = {"id": g, "type": TYPE_NAMES[c.types[g]], "inputs": c.inputs_of(g).tolist()}
            if g in c.labels:
                rec["label"] = str(c.labels[g])
            if c.strata is not None:
                rec["stratum"] = int(c.strata[g])
            gates.append(rec)
        return json.dumps({"gates": gates, "output": c.output}, sort_keys=True, separators=(",", ":"))
    if fmt == "dot":
        shapes = ("box", "ellipse", "diamond", "invtriangle")
        lines = ["digraph cycluit {"]
        for g in range(len(c.types)):
            t = int(c.types[g])
            lab = str(c.labels.get(g, TYPE_NAMES[t])).replace('"', "'")
            extra = ", peripheries=2" if g == c.output else ""
            lines.append(f'  g{g} [shape={shapes[t]}, label="{lab}"{extra}];')
        for g in range(len(c.types)):
            for x in c.inputs_of(g).tolist():
                lines.append(f"  g{x} -> g{g};")
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def import_cycluit(text: str) -> Cycluit:
    doc = json.loads(text)
    gates = sorted(doc["gates"], key=lambda r: r["id"])
    if [r["id"] for r in gates] != list(range(len(gates))):
        raise CfgdError("gate ids must be 0..n-1")
    types = [_TYPE_OF[r["type"]] for r in gates]
    inputs = [r["inputs"] for r in gates]
    labels = {r["id"]: r["label"] for r in gates if "label" in r}
    strata = [r["stratum"] for r in gates] if gates and all("stratum" in r for r in gates) else None
    return Cycluit.from_lists(types, inputs, doc["output"], labels, strata)


# ---------------------------------------------------------------------------
# provenance cycluits


class _Builder:
    def __init__(self):
        self.types: list = []
        self.inputs: list = []
        self.strata: list = []

    def add(self, t, inputs=(), stratum=1):
        self.types.append(t)
        self.inputs.append(list(inputs))
        self.strata.append(stratum)
        return len(self.types) - 1

    def build(self, output, labels):
        return Cycluit.from_lists(self.types, self.inputs, output, labels, self.strata)


def _tree_label(enc, w):
    return (enc.d[w], enc.facts[w])


def build_provenance_python(a, enc) -> Cycluit:
    """Direct construction over Gamma x {0,1}: one input per tree node and,
    per reachable (state, node), ``OR(AND(in, C1), AND(NOT in, C0))``."""
    a.check_alphabet(enc.k, enc.signature)
    B = _Builder()
    n = len(enc.d)
    inp = [B.add(INP, (), 0) for _ in range(n)]
    notinp = [B.add(NOT, (inp[w],), 1) for w in range(n)]
    gate: dict = {}
    nor: dict = {}
    neg: dict = {}
    todo: list = []

    def state_gate(q, w):
        g = gate.get((q, w))
        if g is None:
            g = B.add(OR, (), a.stratum(q) + 1)
            gate[(q, w)] = g
            todo.append((q, w))
        return g

    def circ(f, w, s):
        t = f[0]
        if t == "true":
            return B.add(AND, (), s)
        if t == "false":
            return B.add(OR, (), s)
        if t == "lit":
            q2 = f[1]
            key = (q2, w)
            if key not in nor:
                nor[key] = B.add(OR, [state_gate(q2, x) for x in enc.neighbors(w)], a.stratum(q2) + 1)
            return nor[key]
        if t == "nlit":
            q2 = f[1]
            key = (q2, w)
            if key not in neg:
                neg[key] = B.add(NOT, (state_gate(q2, w),), a.stratum(q2) + 2)
            return neg[key]
        return B.add(AND if t == "and" else OR, [circ(g, w, s) for g in f[1]], s)

    out = state_gate(a.initial, 0)
    while todo:
        q, w = todo.pop()
        s = a.stratum(q) + 1
        lab = _tree_label(enc, w)
        c1 = circ(a.delta(q, (lab, 1)), w, s)
        c0 = circ(a.delta(q, (lab, 0)), w, s)
        g = gate[(q, w)]
        B.inputs[g] = [B.add(AND, (inp[w], c1), s), B.add(AND, (notinp[w], c0), s)]
    return B.build(out, {inp[w]: w for w in range(n)})


# -- fast construction ------------------------------------------------------

_OP_TRUE, _OP_FALSE, _OP_POS, _OP_NEG, _OP_AND, _OP_OR = 0, 1, 2, 3, 4, 5


class _Templates:
    """Formulas flattened into postorder op arrays, deduplicated."""

    def __init__(self):
        self.ids: dict = {}
        self.start: list = []
        self.end: list = []
        self.kind: list = []
        self.arg: list = []
        self.cstart: list = []
        self.cend: list = []
        self.children: list = []

    def get(self, f) -> int:
        t = self.ids.get(f)
        if t is None:
            t = len(self.start)
            self.ids[f] = t
            self.start.append(len(self.kind))
            self._emit(f)
            self.end.append(len(self.kind))
        return t

    def _emit(self, f) -> int:
        tag = f[0]
        if tag in ("and", "or"):
            kids = [self._emit(g) for g in f[1]]
            cs = len(self.children)
            self.children.extend(kids)
            return self._op(_OP_AND if tag == "and" else _OP_OR, -1, cs, len(self.children))
        if tag == "lit":
            return self._op(_OP_POS, f[1], 0, 0)
        if tag == "nlit":
            return self._op(_OP_NEG, f[1], 0, 0)
        return self._op(_OP_TRUE if tag == "true" else _OP_FALSE, -1, 0, 0)

    def _op(self, kind, arg, cs, ce):
        self.kind.append(kind)
        self.arg.append(arg)
        self.cstart.append(cs)
        self.cend.append(ce)
        return len(self.kind) - 1

    def arrays(self):
        i64 = lambda x: np.asarray(x if x else [0], dtype=np.int64)
        return (i64(self.start), i64(self.end), i64(self.kind), i64(self.arg),
                i64(self.cstart), i64(self.cend), i64(self.children))


@nb.njit(cache=True)
def _grow(arr, need):
    if need <= len(arr):
        return arr
    cap = len(arr) * 2
    while cap < need:
        cap *= 2
    out = np.empty(cap, dtype=arr.dtype)
    out[: len(arr)] = arr
    return out


@nb.njit(cache=True)
def _build_kernel(n, cls, parent, left, right, base, slot, nclass, cstart, cs_state, cs_t1, cs_t0,
                  t_start, t_end, o_kind, o_arg, o_cs, o_ce, o_ch, qstrat, init_state, root, nstates,
                  max_ops):
    total_slots = base[n]
    cap = max(16, total_slots * 2)
    gtype = np.empty(cap, dtype=np.int8)
    gstrat = np.empty(cap, dtype=np.int32)
    gnode = np.full(cap, -1, dtype=np.int64)
    ecap = max(16, total_slots * 4)
    esrc = np.empty(ecap, dtype=np.int32)
    edst = np.empty(ecap, dtype=np.int32)
    ng = total_slots
    ne = 0
    # state gates: type and stratum are set when their node is processed
    for i in range(total_slots):
        gtype[i] = 2
        gstrat[i] = 1
    nor_stamp = np.full(nstates, -1, dtype=np.int64)
    nor_gate = np.zeros(nstates, dtype=np.int64)
    not_stamp = np.full(nstates, -1, dtype=np.int64)
    not_gate = np.zeros(nstates, dtype=np.int64)
    res = np.zeros(max_ops + 1, dtype=np.int64)
    tmp = np.zeros(max_ops + 4, dtype=np.int64)
    nb_ = np.zeros(4, dtype=np.int64)
    for w in range(n):
        c = cls[w]
        # neighbours: self, parent, left, right
        nn = 0
        nb_[nn] = w
        nn += 1
        if parent[w] >= 0:
            nb_[nn] = parent[w]
            nn += 1
        if left[w] >= 0:
            nb_[nn] = left[w]
            nn += 1
        if right[w] >= 0:
            nb_[nn] = right[w]
            nn += 1
        in_g = -1
        notin_g = -1
        for j in range(cstart[c + 1] - cstart[c]):
            q = cs_state[cstart[c] + j]
            g = base[w] + j
            sq = qstrat[q] + 1
            t1 = cs_t1[cstart[c] + j]
            t0 = cs_t0[cstart[c] + j]
            for pass_ in range(2):
                if pass_ == 0:
                    t = t1
                else:
                    if t0 == t1:
                        break
                    t = t0
                # instantiate template t; results: -1 false, -2 true, else a gate id
                for i in range(t_start[t], t_end[t]):
                    k = o_kind[i]
                    li = i - t_start[t]
                    if k == 0:
                        res[li] = -2
                    elif k == 1:
                        res[li] = -1
                    elif k == 2:
                        q2 = o_arg[i]
                        if nor_stamp[q2] == w:
                            res[li] = nor_gate[q2]
                            continue
                        cnt = 0
                        for x in range(nn):
                            w2 = nb_[x]
                            s2 = slot[q2 * nclass + cls[w2]]
                            if s2 >= 0:
                                tmp[cnt] = base[w2] + s2
                                cnt += 1
                        if cnt == 0:
                            r = -1
                        elif cnt == 1:
                            r = tmp[0]
                        else:
                            if ng + 1 > len(gtype):
                                gtype = _grow(gtype, ng + 1)
                                gstrat = _grow(gstrat, ng + 1)
                                gnode = _grow(gnode, ng + 1)
                            r = ng
                            gtype[r] = 2
                            gstrat[r] = qstrat[q2] + 1
                            gnode[r] = -1
                            ng += 1
                            if ne + cnt > len(esrc):
                                esrc = _grow(esrc, ne + cnt)
                                edst = _grow(edst, ne + cnt)
                            for x in range(cnt):
                                esrc[ne] = tmp[x]
                                edst[ne] = r
                                ne += 1
                        nor_stamp[q2] = w
                        nor_gate[q2] = r
                        res[li] = r
                    elif k == 3:
                        q2 = o_arg[i]
                        if not_stamp[q2] == w:
                            res[li] = not_gate[q2]
                            continue
                        s2 = slot[q2 * nclass + c]
                        if s2 < 0:
                            r = -2
                        else:
                            if ng + 1 > len(gtype):
                                gtype = _grow(gtype, ng + 1)
                                gstrat = _grow(gstrat, ng + 1)
                                gnode = _grow(gnode, ng + 1)
                            r = ng
                            gtype[r] = 3
                            gstrat[r] = qstrat[q2] + 2
                            gnode[r] = -1
                            ng += 1
                            if ne + 1 > len(esrc):
                                esrc = _grow(esrc, ne + 1)
                                edst = _grow(edst, ne + 1)
                            esrc[ne] = base[w] + s2
                            edst[ne] = r
                            ne += 1
                        not_stamp[q2] = w
                        not_gate[q2] = r
                        res[li] = r
                    else:
                        is_and = k == 4
                        cnt = 0
                        r = -3
                        for y in range(o_cs[i], o_ce[i]):
                            v = res[o_ch[y] - t_start[t]]
                            if v == -1:
                                if is_and:
                                    r = -1
                                    break
                            elif v == -2:
                                if not is_and:
                                    r = -2
                                    break
                            else:
                                tmp[cnt] = v
                                cnt += 1
                        if r == -3:
                            if cnt == 0:
                                r = -2 if is_and else -1
                            elif cnt == 1:
                                r = tmp[0]
                            else:
                                if ng + 1 > len(gtype):
                                    gtype = _grow(gtype, ng + 1)
                                    gstrat = _grow(gstrat, ng + 1)
                                    gnode = _grow(gnode, ng + 1)
                                r = ng
                                gtype[r] = 1 if is_and else 2
                                gstrat[r] = sq
                                gnode[r] = -1
                                ng += 1
                                if ne + cnt > len(esrc):
                                    esrc = _grow(esrc, ne + cnt)
                                    edst = _grow(edst, ne + cnt)
                                for x in range(cnt):
                                    esrc[ne] = tmp[x]
                                    edst[ne] = r
                                    ne += 1
                        res[li] = r
                top = res[t_end[t] - 1 - t_start[t]]
                if pass_ == 0:
                    r1 = top
                else:
                    r0 = top
            if t0 == t1:
                # annotation irrelevant here: the state gate is the formula's root
                gstrat[g] = sq
                if r1 == -2:
                    gtype[g] = 1
                elif r1 == -1:
                    gtype[g] = 2
                else:
                    gtype[g] = 2
                    if ne + 1 > len(esrc):
                        esrc = _grow(esrc, ne + 1)
                        edst = _grow(edst, ne + 1)
                    esrc[ne] = r1
                    edst[ne] = g
                    ne += 1
                continue
            if in_g < 0:
                if ng + 2 > len(gtype):
                    gtype = _grow(gtype, ng + 2)
                    gstrat = _grow(gstrat, ng + 2)
                    gnode = _grow(gnode, ng + 2)
                in_g = ng
                gtype[in_g] = 0
                gstrat[in_g] = 0
                gnode[in_g] = w
                notin_g = ng + 1
                gtype[notin_g] = 3
                gstrat[notin_g] = 1
                gnode[notin_g] = -1
                ng += 2
                if ne + 1 > len(esrc):
                    esrc = _grow(esrc, ne + 1)
                    edst = _grow(edst, ne + 1)
                esrc[ne] = in_g
                edst[ne] = notin_g
                ne += 1
            gstrat[g] = sq
            gtype[g] = 2
            for pass_ in range(2):
                rr = r1 if pass_ == 0 else r0
                guard = in_g if pass_ == 0 else notin_g
                if rr == -1:
                    continue
                if rr == -2:
                    src = guard
                else:
                    if ng + 1 > len(gtype):
                        gtype = _grow(gtype, ng + 1)
                        gstrat = _grow(gstrat, ng + 1)
                        gnode = _grow(gnode, ng + 1)
                    src = ng
                    gtype[src] = 1
                    gstrat[src] = sq
                    gnode[src] = -1
                    ng += 1
                    if ne + 2 > len(esrc):
                        esrc = _grow(esrc, ne + 2)
                        edst = _grow(edst, ne + 2)
                    esrc[ne] = guard
                    edst[ne] = src
                    ne += 1
                    esrc[ne] = rr
                    edst[ne] = src
                    ne += 1
                if ne + 1 > len(esrc):
                    esrc = _grow(esrc, ne + 1)
                    edst = _grow(edst, ne + 1)
                esrc[ne] = src
                edst[ne] = g
                ne += 1
    s0 = slot[init_state * nclass + cls[root]]
    if s0 >= 0:
        output = base[root] + s0
    else:
        if ng + 1 > len(gtype):
            gtype = _grow(gtype, ng + 1)
            gstrat = _grow(gstrat, ng + 1)
            gnode = _grow(gnode, ng + 1)
        output = ng
        gtype[output] = 2
        gstrat[output] = 1
        gnode[output] = -1
        ng += 1
    return gtype[:ng], gstrat[:ng], gnode[:ng], esrc[:ne], edst[:ne], output


@nb.njit(cache=True)
def _compact_kernel(ng, esrc, edst, output):
    """Keep the gates the output depends on; return the renumbering and the CSR."""
    cnt = np.zeros(ng + 1, dtype=np.int64)
    for e in range(len(edst)):
        cnt[edst[e] + 1] += 1
    for g in range(ng):
        cnt[g + 1] += cnt[g]
    ptr = cnt.copy()
    fill = cnt[:-1].copy()
    ins = np.empty(len(esrc), dtype=np.int64)
    for e in range(len(edst)):
        ins[fill[edst[e]]] = esrc[e]
        fill[edst[e]] += 1
    live = np.zeros(ng, dtype=np.uint8)
    stack = np.empty(ng + 1, dtype=np.int64)
    top = 0
    stack[top] = output
    top += 1
    live[output] = 1
    while top > 0:
        top -= 1
        g = stack[top]
        for j in range(ptr[g], ptr[g + 1]):
            x = ins[j]
            if not live[x]:
                live[x] = 1
                stack[top] = x
                top += 1
    newid = np.full(ng, -1, dtype=np.int64)
    m = 0
    for g in range(ng):
        if live[g]:
            newid[g] = m
            m += 1
    nptr = np.zeros(m + 1, dtype=np.int64)
    total = 0
    for g in range(ng):
        if live[g]:
            total += ptr[g + 1] - ptr[g]
            nptr[newid[g] + 1] = total
    nidx = np.empty(total, dtype=np.int32)
    k = 0
    for g in range(ng):
        if live[g]:
            for j in range(ptr[g], ptr[g + 1]):
                nidx[k] = newid[ins[j]]
                k += 1
    return newid, nptr, nidx


def transition_memo(a):
    """Per-automaton transition cache and formula template store.

    The cache maps (state, label) to (dead, t1, t0, positive successors,
    negative successors), where t1 / t0 are template ids for annotations 1 / 0.
    """
    owner = getattr(a, "base", a)
    memos = owner.__dict__.setdefault("_succ_memo", {})
    if type(a) not in memos:
        memos[type(a)] = ({}, _Templates())
    return memos[type(a)]


class ProvenanceStats:
    def __init__(self, **kw):
        self.__dict__.update(kw)

    def as_dict(self):
        return dict(self.__dict__)


def build_provenance(a, enc, prune: bool = True) -> Cycluit:
    """Provenance cycluit of the lifted automaton ``a`` on the encoding ``enc``.

    Input gates exist for the nodes whose annotation can matter; their
    label is the node id.  Formulas are constant-folded, pairs whose
    transition is false under both annotations get no gate, and, with
    ``prune``, gates the output does not depend on are dropped.
    """
    a.check_alphabet(enc.k, enc.signature)
    n = len(enc.d)
    # distinct labels; a node's class is the id of its label
    lab_ids: dict = {}
    cls = np.empty(n, dtype=np.int64)
    labels: list = []
    for w in range(n):
        lab = (enc.d[w], enc.facts[w])
        c = lab_ids.get(lab)
        if c is None:
            c = len(labels)
            lab_ids[lab] = c
            labels.append(lab)
        cls[w] = c
    nclass = len(labels)
    parent = np.asarray(enc.parent, dtype=np.int64)
    left = np.asarray(enc.left, dtype=np.int64)
    right = np.asarray(enc.right, dtype=np.int64)
    adj: list = [set() for _ in range(nclass)]
    for w in range(n):
        c = cls[w]
        adj[c].add(c)
        for m in (parent[w], left[w], right[w]):
            if m >= 0:
                adj[c].add(int(cls[m]))
    adj = [sorted(s) for s in adj]

    memo, tpl = transition_memo(a)
    seen: set = set()
    live: dict = {}  # class -> list of (state, t1, t0)
    root_c = int(cls[0])
    todo = [(a.initial, root_c)]
    seen.add(todo[0])
    formulas = 0
    while todo:
        q, c = todo.pop()
        lab = labels[c]
        hit = memo.get((q, lab))
        if hit is None:
            f1 = a.delta(q, (lab, 1))
            f0 = a.delta(q, (lab, 0))
            pos, neg = set(), set()
            for f in (f1, f0):
                for leaf in literals(f):
                    (pos if leaf[0] == "lit" else neg).add(leaf[1])
            dead = f1 == FALSE and f0 == FALSE
            hit = (dead, tpl.get(f1), tpl.get(f0), tuple(sorted(pos)), tuple(sorted(neg)))
            memo[(q, lab)] = hit
        dead, t1, t0, pos, neg = hit
        formulas += 2
        if dead:
            continue
        live.setdefault(c, []).append((q, t1, t0))
        for q2 in pos:
            for c2 in adj[c]:
                key = (q2, c2)
                if key not in seen:
                    seen.add(key)
                    todo.append(key)
        for q2 in neg:
            key = (q2, c)
            if key not in seen:
                seen.add(key)
                todo.append(key)
    nstates = a.num_states
    if nstates * nclass > 200_000_000:
        raise CfgdError("state/label table too large for the provenance builder")
    slot = np.full(nstates * nclass, -1, dtype=np.int64)
    cstart = np.zeros(nclass + 1, dtype=np.int64)
    cs_state, cs_t1, cs_t0 = [], [], []
    for c in range(nclass):
        entries = sorted(live.get(c, []))
        for j, (q, t1, t0) in enumerate(entries):
            slot[q * nclass + c] = j
            cs_state.append(q)
            cs_t1.append(t1)
            cs_t0.append(t0)
        cstart[c + 1] = len(cs_state)
    nlive = np.diff(cstart)
    base = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(nlive[cls], out=base[1:])
    qstrat = np.asarray([a.stratum(q) for q in range(nstates)], dtype=np.int64)
    arrs = tpl.arrays()
    max_ops = max([e - s for s, e in zip(tpl.start, tpl.end)] or [1])
    i64 = lambda x: np.asarray(x if len(x) else [0], dtype=np.int64)
    gtype, gstrat, gnode, esrc, edst, output = _build_kernel(
        n, cls, parent, left, right, base, slot, nclass, cstart, i64(cs_state), i64(cs_t1), i64(cs_t0),
        *arrs, qstrat, a.initial, 0, nstates, max_ops,
    )
    ng = len(gtype)
    if prune:
        newid, nptr, nidx = _compact_kernel(ng, esrc, edst, output)
        keep = newid >= 0
        types = gtype[keep]
        strata = gstrat[keep]
        nodes = gnode[keep]
        out = int(newid[output])
    else:
        order = np.argsort(edst, kind="stable")
        nidx = esrc[order].astype(np.int32)
        nptr = np.zeros(ng + 1, dtype=np.int64)
        np.cumsum(np.bincount(edst, minlength=ng), out=nptr[1:])
        types, strata, nodes, out = gtype, gstrat, gnode, int(output)
    inp = np.flatnonzero(types == INP)
    c = Cycluit(types, nptr, nidx, out, {int(g): int(nodes[g]) for g in inp}, strata)
    c.stats = ProvenanceStats(
        tree_nodes=n, labels=nclass, states=nstates, live_state_classes=int(cstart[-1]),
        templates=len({t for e in live.values() for _, t1, t0 in e for t in (t1, t0)}),
        formulas=formulas, gates_before_pruning=ng, gates=len(types),
        wires=len(nidx),
    )
    return c
