"""Tree decompositions, tree encodings over Gamma^k_sigma, and their conversions.

A tree encoding is a full ordered binary tree whose nodes carry a set ``d``
of element names (drawn from ``a1 .. a{2k+2}``) and at most one fact over
``d``.  Names are ints ``0 .. 2k+1`` internally and stored as bitmasks.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    DecompositionError,
    DisconnectedElementError,
    MalformedEncodingError,
    UncoveredFactError,
    WidthExceededError,
)
from .relational import Fact, Instance, Signature


# ---------------------------------------------------------------------------
# tree decompositions


class TreeDecomposition:
    """A rooted tree of bags. Bags are indexed ``0 .. m-1``; ``parent[root] == -1``."""

    __slots__ = ("bags", "parent", "root", "_children")

    def __init__(self, bags: Sequence[Iterable], parent: Sequence[int]):
        self.bags = tuple(frozenset(str(x) for x in b) for b in bags)
        self.parent = tuple(int(p) for p in parent)
        if len(self.bags) != len(self.parent):
            raise DecompositionError("bags and parent arrays differ in length")
        if not self.bags:
            raise DecompositionError("a decomposition needs at least one bag")
        roots = [i for i, p in enumerate(self.parent) if p == -1]
        if len(roots) != 1:
            raise DecompositionError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]
        children: list[list[int]] = [[] for _ in self.bags]
        for i, p in enumerate(self.parent):
            if p != -1:
                if not 0 <= p < len(self.bags):
                    raise DecompositionError(f"bag {i} has unknown parent {p}")
                children[p].append(i)
        self._children = tuple(tuple(c) for c in children)
        if len(self.preorder()) != len(self.bags):
            raise DecompositionError("parent pointers do not form a tree")

    @classmethod
    def from_edges(cls, bags, edges: Iterable[tuple[int, int]], root: int = 0):
        """Build from an undirected tree given as an edge list, rooted at ``root``."""
        bags = list(bags)
        adj: list[list[int]] = [[] for _ in bags]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        parent = [-2] * len(bags)
        parent[root] = -1
        stack = [root]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if parent[v] == -2:
                    parent[v] = u
                    stack.append(v)
        if -2 in parent:
            raise DecompositionError("decomposition tree is disconnected")
        return cls(bags, parent)

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    def preorder(self) -> list[int]:
        order, stack = [], [self.root]
        seen = set()
        while stack:
            u = stack.pop()
            if u in seen:
                break
            seen.add(u)
            order.append(u)
            stack.extend(reversed(self._children[u]))
        return order

    @property
    def width(self) -> int:
        return max(0, max(len(b) for b in self.bags) - 1)

    def __len__(self):
        return len(self.bags)

    def __repr__(self):
        return f"TreeDecomposition({len(self.bags)} bags, width {self.width})"

    def edges(self):
        return [(p, i) for i, p in enumerate(self.parent) if p != -1]


def _check_connected(td: TreeDecomposition, elements: Iterable) -> None:
    occ: dict = {}
    for i, b in enumerate(td.bags):
        for e in b:
            occ.setdefault(e, []).append(i)
    for e in sorted(occ):
        bags = occ[e]
        bagset = set(bags)
        tops = [i for i in bags if td.parent[i] not in bagset]
        if len(tops) > 1:
            raise DisconnectedElementError(e, tops[0], tops[1])


def validate_decomposition(instance: Instance, td: TreeDecomposition) -> int:
    """Check coverage and connectedness; return the width."""
    extra = set().union(*td.bags) - instance.dom
    if extra:
        raise DecompositionError(f"bags mention elements outside the instance: {sorted(extra)[:5]}")
    by_elem: dict = {}
    for i, b in enumerate(td.bags):
        for e in b:
            by_elem.setdefault(e, []).append(i)
    for f in sorted(instance.facts):
        args = set(f.args)
        cands = min((by_elem.get(a, []) for a in args), key=len)
        if not any(args <= td.bags[i] for i in cands):
            raise UncoveredFactError(f)
    _check_connected(td, instance.dom)
    return td.width


def primal_graph(instance: Instance) -> dict:
    adj: dict = {e: set() for e in instance.dom}
    for f in instance.facts:
        for a in f.args:
            for b in f.args:
                if a != b:
                    adj[a].add(b)
    return adj


def decompose_adjacency(adj: dict) -> TreeDecomposition:
    """Min-fill elimination (ties: min degree, then smallest element id)."""
    names = sorted(adj, key=str)
    if not names:
        return TreeDecomposition([()], [-1])
    ident = {v: i for i, v in enumerate(names)}
    nbrs = [set(ident[w] for w in adj[v] if w != v) for v in names]
    n = len(names)

    def fill(v):
        ns = list(nbrs[v])
        missing = 0
        for i, a in enumerate(ns):
            na = nbrs[a]
            for b in ns[i + 1:]:
                if b not in na:
                    missing += 1
        return missing

    key = [(fill(v), len(nbrs[v]), v) for v in range(n)]
    heap = list(key)
    heapq.heapify(heap)
    eliminated = [False] * n
    order_pos = [0] * n
    bag_of: list = [None] * n
    later: list = [None] * n
    pos = 0
    while heap:
        item = heapq.heappop(heap)
        v = item[2]
        if eliminated[v] or item != key[v]:
            continue
        eliminated[v] = True
        order_pos[v] = pos
        pos += 1
        ns = nbrs[v]
        bag_of[v] = frozenset(ns) | {v}
        later[v] = tuple(ns)
        ns_list = list(ns)
        for i, a in enumerate(ns_list):
            nbrs[a].discard(v)
            for b in ns_list[i + 1:]:
                if b not in nbrs[a]:
                    nbrs[a].add(b)
                    nbrs[b].add(a)
        touched = set(ns)
        for a in ns:
            touched |= nbrs[a]
        for u in touched:
            if not eliminated[u]:
                nk = (fill(u), len(nbrs[u]), u)
                if nk != key[u]:
                    key[u] = nk
                    heapq.heappush(heap, nk)
    # bag index = elimination position
    by_pos = sorted(range(n), key=lambda v: order_pos[v])
    parent = [-1] * n
    comp_roots = []
    for v in by_pos:
        if later[v]:
            parent[order_pos[v]] = min(order_pos[u] for u in later[v])
        else:
            comp_roots.append(order_pos[v])
    # chain component roots so that the last eliminated bag is the root
    for a, b in zip(comp_roots, comp_roots[1:]):
        parent[a] = b
    bags = [bag_of[v] for v in by_pos]
    bags, parent = _contract_subset_edges(bags, parent)
    return TreeDecomposition([[names[x] for x in b] for b in bags], parent)


def _contract_subset_edges(bags: list, parent: list):
    """Merge each bag into its parent when one contains the other (children come first)."""
    n = len(bags)
    kids: list = [[] for _ in range(n)]
    for i, p in enumerate(parent):
        if p >= 0:
            kids[p].append(i)
    alive = [True] * n
    for i in range(n):
        p = parent[i]
        if p < 0:
            continue
        if bags[i] <= bags[p] or bags[p] <= bags[i]:
            if bags[p] <= bags[i]:
                bags[p] = bags[i]
            for c in kids[i]:
                if alive[c]:
                    parent[c] = p
                    kids[p].append(c)
            alive[i] = False
    keep = [i for i in range(n) if alive[i]]
    new = {i: j for j, i in enumerate(keep)}
    return [bags[i] for i in keep], [new[parent[i]] if parent[i] >= 0 else -1 for i in keep]


def decompose_minfill(instance: Instance) -> TreeDecomposition:
    return decompose_adjacency(primal_graph(instance))


def check_simplicial(graph: dict, td: TreeDecomposition) -> bool:
    """True iff every parent/child interface is a clique of ``graph``.

    ``graph`` maps each vertex to its neighbor set. The decomposition must
    cover every edge and be connected, otherwise DecompositionError is raised.
    """
    adj = {str(v): {str(w) for w in ws} for v, ws in graph.items()}
    for v, ws in adj.items():
        for w in ws:
            adj.setdefault(w, set()).add(v)
    verts = set(adj)
    extra = set().union(*td.bags) - verts
    if extra:
        raise DecompositionError(f"bags mention unknown vertices: {sorted(extra)[:5]}")
    covered = set().union(*td.bags)
    for v in verts - covered:
        raise DecompositionError(f"vertex {v} is not in any bag")
    for v, ws in adj.items():
        for w in ws:
            if not any(v in b and w in b for b in td.bags):
                raise DecompositionError(f"edge {v}-{w} is not covered by any bag")
    _check_connected(td, verts)
    for i, p in enumerate(td.parent):
        if p == -1:
            continue
        s = sorted(td.bags[i] & td.bags[p])
        for x, a in enumerate(s):
            for b in s[x + 1:]:
                if b not in adj[a]:
                    return False
    return True


def primal_of_atoms(atoms) -> dict:
    """Primal graph of a list of atoms (anything with ``.args``)."""
    adj: dict = {}
    for at in atoms:
        for a in at.args:
            adj.setdefault(str(a), set())
            for b in at.args:
                if a != b:
                    adj[str(a)].add(str(b))
    return adj


# ---------------------------------------------------------------------------
# PACE .td format


def write_pace(td: TreeDecomposition) -> tuple[str, str]:
    """Return (td text, mapping text). PACE bags and vertices are 1-based."""
    elems = sorted(set().union(*td.bags), key=str)
    num = {e: i + 1 for i, e in enumerate(elems)}
    order = td.preorder()
    bid = {b: i + 1 for i, b in enumerate(order)}
    lines = [f"s td {len(td.bags)} {td.width + 1} {len(elems)}"]
    for b in order:
        lines.append(" ".join(["b", str(bid[b])] + [str(num[e]) for e in sorted(td.bags[b], key=num.get)]))
    for p, c in td.edges():
        lines.append(f"{bid[p]} {bid[c]}")
    mapping = "".join(f"{num[e]} {e}\n" for e in elems)
    return "\n".join(lines) + "\n", mapping


def read_pace(text: str, mapping: str | None = None) -> TreeDecomposition:
    """Parse a PACE-2017 ``.td`` file, rooted at bag 1."""
    names: dict = {}
    if mapping:
        for line in mapping.splitlines():
            if line.strip():
                k, v = line.split(None, 1)
                names[k] = v.strip()
    nbags = None
    bags: dict = {}
    edges = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "s":
            if len(parts) != 5 or parts[1] != "td":
                raise DecompositionError(f"bad solution line {line!r}")
            nbags = int(parts[2])
        elif parts[0] == "b":
            bags[int(parts[1])] = [names.get(x, x) for x in parts[2:]]
        else:
            edges.append((int(parts[0]), int(parts[1])))
    if nbags is None:
        raise DecompositionError("missing 's td' line")
    if sorted(bags) != list(range(1, nbags + 1)):
        raise DecompositionError("bag ids must be 1..#bags")
    return TreeDecomposition.from_edges(
        [bags[i] for i in range(1, nbags + 1)], [(u - 1, v - 1) for u, v in edges], root=0
    )


# ---------------------------------------------------------------------------
# tree encodings


def name_str(a: int) -> str:
    return f"a{a + 1}"


def name_parse(s: str) -> int:
    if not (s.startswith("a") and s[1:].isdigit()):
        raise MalformedEncodingError(f"bad element name {s!r}")
    return int(s[1:]) - 1


def mask_names(mask: int) -> list[int]:
    out, a = [], 0
    while mask:
        if mask & 1:
            out.append(a)
        mask >>= 1
        a += 1
    return out


@dataclass
class TreeEncoding:
    """A (sigma, k)-tree encoding. Node 0 is the root; missing children are -1.

    ``facts[n]`` is ``None`` or ``(relation, names)``; ``origin[n]`` is the
    instance fact encoded at ``n`` when the encoding comes from ``encode``.
    """

    k: int
    signature: Signature
    d: list  # bitmask per node
    facts: list
    left: list
    right: list
    origin: list | None = None

    def __post_init__(self):
        n = len(self.d)
        self.parent = [-1] * n
        for i in range(n):
            for c in (self.left[i], self.right[i]):
                if c != -1:
                    self.parent[c] = i

    def __len__(self):
        return len(self.d)

    @property
    def root(self) -> int:
        return 0

    def label(self, n: int):
        return (self.d[n], self.facts[n])

    def neighbors(self, n: int) -> list[int]:
        """Self, parent, left child, right child (those that exist)."""
        out = [n]
        for m in (self.parent[n], self.left[n], self.right[n]):
            if m != -1:
                out.append(m)
        return out

    def check(self) -> None:
        """Raise MalformedEncodingError unless all encoding invariants hold."""
        n = len(self.d)
        if n == 0:
            raise MalformedEncodingError("empty tree")
        nd = 2 * self.k + 2
        seen = [False] * n
        stack = [0]
        while stack:
            v = stack.pop()
            if seen[v]:
                raise MalformedEncodingError("node reached twice")
            seen[v] = True
            l, r = self.left[v], self.right[v]
            if (l == -1) != (r == -1):
                raise MalformedEncodingError(f"node {v} has exactly one child")
            if l != -1:
                stack.extend((l, r))
        if not all(seen):
            raise MalformedEncodingError("unreachable nodes")
        for v in range(n):
            d = self.d[v]
            if d >> nd:
                raise MalformedEncodingError(f"node {v} uses names outside D_{self.k}")
            if bin(d).count("1") > self.k + 1:
                raise MalformedEncodingError(f"node {v} has more than k+1 names")
            f = self.facts[v]
            if f is not None:
                rel, args = f
                if rel not in self.signature or self.signature.arity(rel) != len(args):
                    raise MalformedEncodingError(f"node {v} fact {rel} does not fit the signature")
                for a in args:
                    if not (d >> a) & 1:
                        raise MalformedEncodingError(f"node {v}: fact mentions {name_str(a)} outside its bag")

    def to_json(self) -> str:
        nodes = []
        for v in range(len(self.d)):
            f = self.facts[v]
            nodes.append({
                "id": v,
                "d": [name_str(a) for a in mask_names(self.d[v])],
                "fact": None if f is None else {"relation": f[0], "args": [name_str(a) for a in f[1]]},
                "left": None if self.left[v] == -1 else self.left[v],
                "right": None if self.right[v] == -1 else self.right[v],
            })
        doc = {"k": self.k, "signature": dict(sorted(self.signature.relations.items())), "nodes": nodes}
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TreeEncoding":
        doc = json.loads(text)
        nodes = sorted(doc["nodes"], key=lambda x: x["id"])
        if [x["id"] for x in nodes] != list(range(len(nodes))):
            raise MalformedEncodingError("node ids must be 0..n-1")
        d, facts, left, right = [], [], [], []
        for x in nodes:
            m = 0
            for s in x["d"]:
                m |= 1 << name_parse(s)
            d.append(m)
            f = x.get("fact")
            facts.append(None if f is None else (f["relation"], tuple(name_parse(a) for a in f["args"])))
            left.append(-1 if x.get("left") is None else x["left"])
            right.append(-1 if x.get("right") is None else x["right"])
        enc = cls(doc["k"], Signature(doc["signature"]), d, facts, left, right)
        enc.check()
        return enc


def _topmost_bags(instance: Instance, td: TreeDecomposition) -> dict:
    """Map each fact to the highest bag containing all its arguments."""
    depth = [0] * len(td.bags)
    top: dict = {}
    for b in td.preorder():
        p = td.parent[b]
        depth[b] = 0 if p == -1 else depth[p] + 1
        for e in td.bags[b]:
            if e not in top:
                top[e] = b
    out = {}
    for f in instance.facts:
        b = max((top[a] for a in f.args), key=lambda x: depth[x])
        if not set(f.args) <= td.bags[b]:
            raise UncoveredFactError(f)
        out[f] = b
    return out


def encode(instance: Instance, td: TreeDecomposition, k: int | None = None) -> TreeEncoding:
    """Encode ``instance`` along ``td`` as a (sigma, k)-tree encoding."""
    width = validate_decomposition(instance, td)
    if k is None:
        k = width
    if width > k:
        raise WidthExceededError(f"decomposition has width {width} > k = {k}")
    sig = instance.signature
    if not instance.facts:
        return TreeEncoding(k, sig, [0], [None], [-1], [-1], [None])
    placed: dict = {b: [] for b in range(len(td.bags))}
    for f, b in _topmost_bags(instance, td).items():
        placed[b].append(f)
    for b in placed:
        placed[b].sort()

    nd = 2 * k + 2
    names: list = [None] * len(td.bags)
    for b in td.preorder():
        p = td.parent[b]
        pn = names[p] if p != -1 else {}
        cur: dict = {}
        for e in td.bags[b]:
            if e in pn:
                cur[e] = pn[e]
        banned = set(pn.values()) | set(cur.values())
        free = (a for a in range(nd) if a not in banned)
        for e in sorted(td.bags[b] - cur.keys()):
            cur[e] = next(free)
        names[b] = cur

    d: list = []
    facts: list = []
    origin: list = []
    left: list = []
    right: list = []

    def new(mask, fact, orig):
        d.append(mask)
        facts.append(fact)
        origin.append(orig)
        left.append(-1)
        right.append(-1)
        return len(d) - 1

    def bag_mask(b):
        m = 0
        for a in names[b].values():
            m |= 1 << a
        return m

    # each bag becomes a right spine; spine node j gets fact j and child j on its left
    root = new(bag_mask(td.root), None, None)
    todo = [(td.root, root)]
    while todo:
        b, first = todo.pop()
        fs = placed[b]
        ch = td.children(b)
        m = max(len(fs), len(ch), 1)
        mask = d[first]
        nodes = [first] + [new(mask, None, None) for _ in range(m - 1)]
        for j, v in enumerate(nodes):
            if j < len(fs):
                f = fs[j]
                facts[v] = (f.relation, tuple(names[b][x] for x in f.args))
                origin[v] = f
            lc = -1
            if j < len(ch):
                c = ch[j]
                lc = new(bag_mask(c), None, None)
                todo.append((c, lc))
            rc = nodes[j + 1] if j + 1 < m else -1
            if lc == -1 and rc == -1:
                continue
            if lc == -1:
                lc = new(0, None, None)
            if rc == -1:
                rc = new(0, None, None)
            left[v], right[v] = lc, rc
    return TreeEncoding(k, sig, d, facts, left, right, origin)


def bag_decoding(enc: TreeEncoding, rng=None) -> list[dict]:
    """A valid set of bag decoding functions: one fresh element per a-connected subtree.

    Passing a ``random.Random`` shuffles the fresh identifiers, which gives
    another valid set of decoding functions for the same encoding.
    """
    n = len(enc.d)
    parent = enc.parent
    cls: dict = {}
    count = 0
    for v in _enc_preorder(enc):
        p = parent[v]
        for a in mask_names(enc.d[v]):
            if p != -1 and (enc.d[p] >> a) & 1:
                cls[(v, a)] = cls[(p, a)]
            else:
                cls[(v, a)] = count
                count += 1
    perm = list(range(count))
    if rng is not None:
        rng.shuffle(perm)
    return [{a: f"e{perm[cls[(v, a)]]}" for a in mask_names(enc.d[v])} for v in range(n)]


def _enc_preorder(enc: TreeEncoding) -> list[int]:
    order, stack = [], [0]
    while stack:
        v = stack.pop()
        order.append(v)
        if enc.right[v] != -1:
            stack.append(enc.right[v])
        if enc.left[v] != -1:
            stack.append(enc.left[v])
    return order


def decode(enc: TreeEncoding, decoding: list[dict] | None = None) -> Instance:
    """Decode to an instance; element ids are fresh (``e0``, ``e1``, ...)."""
    for v in range(len(enc.d)):
        f = enc.facts[v]
        if f is not None and any(not (enc.d[v] >> a) & 1 for a in f[1]):
            raise MalformedEncodingError(f"node {v}: fact mentions a name outside its bag")
    dec = decoding if decoding is not None else bag_decoding(enc)
    out = []
    for v in range(len(enc.d)):
        f = enc.facts[v]
        if f is not None:
            out.append(Fact(f[0], tuple(dec[v][a] for a in f[1])))
    return Instance(out, enc.signature)


def check_bag_decoding(enc: TreeEncoding, dec: list[dict]) -> bool:
    """Validity: same value iff same a-connected subtree."""
    ref = bag_decoding(enc)
    pairs: dict = {}
    for v in range(len(enc.d)):
        if set(dec[v]) != set(mask_names(enc.d[v])):
            return False
        for a, x in dec[v].items():
            r = (a, ref[v][a])
            if pairs.setdefault(r, x) != x:
                return False
    # distinct subtrees for the same name must never collide
    seen: dict = {}
    for (a, r), x in pairs.items():
        if seen.setdefault((a, x), r) != r:
            return False
    return True
