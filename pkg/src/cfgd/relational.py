"""Relational signatures, instances, the fact-file format and isomorphism testing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .errors import ArityError, ParseError, SizeLimitError, UnknownRelationError

_IDENT = r"[A-Za-z0-9_]+"
_FACT_RE = re.compile(rf"\s*({_IDENT})\s*\(\s*([^()]*?)\s*\)\s*\.")
_ELEM_RE = re.compile(rf"^{_IDENT}$")


@dataclass(frozen=True)
class Signature:
    """Relation names with their arities."""

    relations: Mapping[str, int] = field(default_factory=dict)
    nullary: bool = field(default=False, compare=False)

    def __post_init__(self):
        rels = dict(self.relations)
        for name, ar in rels.items():
            if ar < (0 if self.nullary else 1):
                raise ArityError(f"relation {name} has arity {ar}; arities must be >= 1")
        object.__setattr__(self, "relations", rels)

    def __hash__(self):
        return hash(frozenset(self.relations.items()))

    def __contains__(self, name):
        return name in self.relations

    def arity(self, name: str) -> int:
        return self.relations[name]

    @property
    def max_arity(self) -> int:
        return max(self.relations.values(), default=0)

    def union(self, other: "Signature") -> "Signature":
        rels = dict(self.relations)
        for name, ar in other.relations.items():
            if rels.get(name, ar) != ar:
                raise ArityError(f"relation {name} used with arities {rels[name]} and {ar}")
            rels[name] = ar
        return Signature(rels)


class Fact(NamedTuple):
    relation: str
    args: tuple

    def __str__(self):
        return f"{self.relation}({','.join(map(str, self.args))})"


class Instance:
    """An immutable finite set of facts over a signature."""

    __slots__ = ("signature", "facts", "dom")

    def __init__(self, facts: Iterable[Fact] = (), signature: Signature | None = None):
        facts = frozenset(Fact(f[0], tuple(str(a) for a in f[1])) for f in facts)
        if signature is None:
            rels: dict[str, int] = {}
            for f in sorted(facts):
                ar = rels.setdefault(f.relation, len(f.args))
                if ar != len(f.args):
                    raise ArityError(f"relation {f.relation} used with arities {ar} and {len(f.args)}")
            signature = Signature(rels)
        else:
            for f in facts:
                if f.relation not in signature:
                    raise UnknownRelationError(f"unknown relation {f.relation}")
                if signature.arity(f.relation) != len(f.args):
                    raise ArityError(
                        f"{f} has {len(f.args)} arguments, "
                        f"{f.relation} has arity {signature.arity(f.relation)}"
                    )
        self.signature = signature
        self.facts = facts
        self.dom = frozenset(a for f in facts for a in f.args)

    def __len__(self):
        return len(self.facts)

    def __iter__(self):
        return iter(sorted(self.facts))

    def __contains__(self, fact):
        return fact in self.facts

    def __eq__(self, other):
        return isinstance(other, Instance) and self.facts == other.facts

    def __hash__(self):
        return hash(self.facts)

    def __repr__(self):
        return f"Instance({len(self.facts)} facts, {len(self.dom)} elements)"

    def subinstance(self, facts: Iterable[Fact]) -> "Instance":
        facts = frozenset(facts)
        if not facts <= self.facts:
            raise ValueError("not a subset of the instance")
        return Instance(facts, self.signature)

    def without(self, *facts: Fact) -> "Instance":
        return Instance(self.facts - set(facts), self.signature)

    def rename(self, mapping) -> "Instance":
        """Apply an element renaming (dict or callable)."""
        f = mapping if callable(mapping) else mapping.__getitem__
        return Instance((Fact(x.relation, tuple(f(a) for a in x.args)) for x in self.facts), self.signature)

    def by_relation(self) -> dict[str, set]:
        out: dict[str, set] = {r: set() for r in self.signature.relations}
        for f in self.facts:
            out.setdefault(f.relation, set()).add(f.args)
        return out


def parse_instance(text: str, signature: Signature | None = None) -> Instance:
    """Parse a fact file of ``Rel(a1,...,ak).`` facts (any number per line), ``%`` comments.

    Without an explicit signature, the first use of a relation fixes its arity.
    """
    facts = []
    arities: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0]
        pos = 0
        while line[pos:].strip():
            m = _FACT_RE.match(line, pos)
            if not m:
                col = pos + len(line[pos:]) - len(line[pos:].lstrip()) + 1
                raise ParseError(f"malformed fact {line[pos:].strip()!r}", lineno, col)
            pos = m.end()
            rel, argtext = m.group(1), m.group(2)
            args = tuple(a.strip() for a in argtext.split(",")) if argtext.strip() else ()
            for a in args:
                if not _ELEM_RE.match(a):
                    raise ParseError(f"bad element identifier {a!r}", lineno, line.find(a) + 1 if a else None)
            if not args:
                raise ArityError(f"line {lineno}: facts need at least one argument")
            if signature is not None:
                if rel not in signature:
                    raise UnknownRelationError(f"line {lineno}: unknown relation {rel}")
                if signature.arity(rel) != len(args):
                    raise ArityError(
                        f"line {lineno}: {rel} has arity {signature.arity(rel)}, got {len(args)} arguments"
                    )
            else:
                ar = arities.setdefault(rel, len(args))
                if ar != len(args):
                    raise ArityError(f"line {lineno}: {rel} first used with arity {ar}, got {len(args)}")
            facts.append(Fact(rel, args))
    return Instance(facts, signature if signature is not None else Signature(arities))


def format_instance(instance: Instance) -> str:
    return "".join(f"{f}.\n" for f in sorted(instance.facts))


def parse_signature(text: str) -> Signature:
    """Parse ``Rel/arity`` declarations (whitespace or newline separated)."""
    rels = {}
    for tok in text.replace(",", " ").split():
        name, _, ar = tok.partition("/")
        if not ar.isdigit():
            raise ParseError(f"bad signature entry {tok!r}")
        rels[name] = int(ar)
    return Signature(rels)


def are_isomorphic(a: Instance, b: Instance, limit: int = 20) -> bool:
    """Backtracking search for a bijection between the domains mapping facts onto facts."""
    if len(a.dom) > limit or len(b.dom) > limit:
        raise SizeLimitError(f"isomorphism check limited to {limit} elements")
    if len(a) != len(b) or len(a.dom) != len(b.dom):
        return False

    def profile(inst):
        # element -> multiset of (relation, position) occurrences
        prof: dict = {e: [] for e in inst.dom}
        for f in inst.facts:
            for i, x in enumerate(f.args):
                prof[x].append((f.relation, i))
        return {e: tuple(sorted(p)) for e, p in prof.items()}

    pa, pb = profile(a), profile(b)
    if sorted(pa.values()) != sorted(pb.values()):
        return False
    rel_a = {}
    for f in a.facts:
        rel_a.setdefault(f.relation, set()).add(f.args)
    if {r: len(t) for r, t in rel_a.items()} != {r: len(t) for r, t in b.by_relation().items() if t}:
        return False

    facts_of = {e: [] for e in a.dom}
    for f in a.facts:
        for x in set(f.args):
            facts_of[x].append(f)
    # most constrained elements first
    order = sorted(a.dom, key=lambda e: (-len(facts_of[e]), str(e)))
    candidates = {e: [x for x in b.dom if pb[x] == pa[e]] for e in a.dom}
    fb = b.facts
    mapping: dict = {}
    used: set = set()

    def consistent(e):
        for f in facts_of[e]:
            if all(x in mapping for x in f.args):
                if Fact(f.relation, tuple(mapping[x] for x in f.args)) not in fb:
                    return False
        return True

    def search(i):
        if i == len(order):
            return True
        e = order[i]
        for c in candidates[e]:
            if c in used:
                continue
            mapping[e] = c
            used.add(c)
            if consistent(e) and search(i + 1):
                return True
            del mapping[e]
            used.discard(c)
        return False

    # |a| == |b| and the mapping is injective, so fact images cover b exactly
    return search(0)
