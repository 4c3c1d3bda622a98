"""Finite relational structures with partial functions and type oracles.

A structure carries named relations and named partial functions over a
universe ``{0, ..., size-1}``.  Three oracles matter downstream:

``qf_type``
    canonical quantifier-free type of a tuple: the isomorphism type of the
    tuple's closure under the partial functions, with the tuple positions
    marked as generators.

``type_equal``
    full-type equality of two tuples in the same structure, either exact
    (``"orbit"``: some automorphism maps one tuple to the other pointwise)
    or approximate (``("ef", d)``: the duplicator survives ``d`` rounds of
    the back-and-forth game).  The approximation has one-sided error: it
    may conflate tuples that lie in different orbits, never the converse,
    and it coincides with the orbit oracle at depth ``size``.

``partial_automorphisms``
    exhaustive enumeration of injective partial maps that preserve all
    relations and function graphs in both directions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Relation",
    "PartialFn",
    "FiniteStructure",
    "QfType",
    "PartialAutomorphism",
    "qf_closure",
    "qf_type",
    "type_equal",
    "automorphism_extending",
    "partial_automorphisms",
]

# Free (non-generator) closure elements are canonicalised by exhaustive
# relabeling; closures past this many free elements are a usage error.
_FREE_LIMIT = 8


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    tuples: frozenset

    def __post_init__(self):
        for t in self.tuples:
            if len(t) != self.arity:
                raise ValueError(f"relation {self.name}: tuple {t} has arity != {self.arity}")


@dataclass(frozen=True)
class PartialFn:
    """Partial function given by its graph, stored as sorted (args, value) pairs."""

    name: str
    arity: int
    graph: tuple

    def __post_init__(self):
        seen = {}
        for args, val in self.graph:
            if len(args) != self.arity:
                raise ValueError(f"function {self.name}: args {args} have arity != {self.arity}")
            if seen.setdefault(args, val) != val:
                raise ValueError(f"function {self.name}: graph is not single-valued at {args}")

    @cached_property
    def as_dict(self) -> dict:
        return dict(self.graph)


@dataclass(frozen=True)
class FiniteStructure:
    size: int
    relations: tuple = ()
    functions: tuple = ()

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("universe size must be >= 0")
        names = [r.name for r in self.relations] + [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise ValueError("relation/function names must be distinct")
        for r in self.relations:
            for t in r.tuples:
                if any(not (0 <= e < self.size) for e in t):
                    raise ValueError(f"relation {r.name}: tuple {t} outside universe")
        for f in self.functions:
            for args, val in f.graph:
                if any(not (0 <= e < self.size) for e in args) or not (0 <= val < self.size):
                    raise ValueError(f"function {f.name}: entry {(args, val)} outside universe")

    @classmethod
    def make(cls, size, relations=None, functions=None):
        """Build from friendlier inputs.

        ``relations``: mapping name -> (arity, iterable of tuples).
        ``functions``: mapping name -> (arity, mapping args-tuple -> value).
        """
        rels = tuple(
            Relation(name, arity, frozenset(tuple(t) for t in tuples))
            for name, (arity, tuples) in (relations or {}).items()
        )
        fns = tuple(
            PartialFn(name, arity, tuple(sorted((tuple(a), v) for a, v in graph.items())))
            for name, (arity, graph) in (functions or {}).items()
        )
        return cls(size, rels, fns)

    def relation(self, name) -> Relation:
        return self._rel_index[name]

    def function(self, name) -> PartialFn:
        return self._fn_index[name]

    @cached_property
    def _rel_index(self) -> dict:
        return {r.name: r for r in self.relations}

    @cached_property
    def _fn_index(self) -> dict:
        return {f.name: f for f in self.functions}

    @cached_property
    def vocabulary(self) -> frozenset:
        return frozenset(self._rel_index) | frozenset(self._fn_index)

    # Per-element indexes used by the backtracking searches.
    @cached_property
    def _rel_by_elem(self) -> dict:
        idx = {e: [] for e in range(self.size)}
        for r in self.relations:
            for t in r.tuples:
                for e in set(t):
                    idx[e].append((r.name, t))
        return idx

    @cached_property
    def _fn_by_elem(self) -> dict:
        idx = {e: [] for e in range(self.size)}
        for f in self.functions:
            for args, val in f.graph:
                for e in set(args) | {val}:
                    idx[e].append((f.name, args, val))
        return idx

    # Memo tables keyed per structure instance so nothing rehashes the whole
    # structure on every oracle call.
    @cached_property
    def _ef_memo(self) -> dict:
        return {}

    @cached_property
    def _qf_memo(self) -> dict:
        return {}

    @cached_property
    def _teq_memo(self) -> dict:
        return {}


@dataclass(frozen=True)
class QfType:
    """Canonical quantifier-free type: a hashable serialization of the
    generator-marked closure.  Two tuples get equal QfTypes exactly when an
    isomorphism of their function-closures maps one tuple to the other
    pointwise."""

    key: tuple
    generators: int
    closure_size: int

    def __repr__(self):
        return f"QfType(gen={self.generators}, closure={self.closure_size}, key_hash={hash(self.key) & 0xFFFFFF:06x})"


def qf_closure(s: FiniteStructure, elems: Iterable[int], fn_names=None) -> list:
    """Closure of ``elems`` under the structure's partial functions, as a list
    in deterministic discovery order (input order, then function/graph order,
    iterated to a fixpoint).  ``fn_names`` restricts to a subset of functions."""
    order = []
    seen = set()
    for e in elems:
        if e not in seen:
            seen.add(e)
            order.append(e)
    fns = s.functions if fn_names is None else tuple(s.function(n) for n in fn_names)
    changed = True
    while changed:
        changed = False
        for fn in fns:
            for args, val in fn.graph:
                if val not in seen and all(a in seen for a in args):
                    seen.add(val)
                    order.append(val)
                    changed = True
    return order


def _qf_type_uncached(s: FiniteStructure, t: tuple) -> QfType:
    closure = qf_closure(s, t)
    in_closure = set(closure)
    gen_label = {}
    for x in t:
        gen_label.setdefault(x, len(gen_label))
    k = len(gen_label)
    free = [x for x in closure if x not in gen_label]
    if len(free) > _FREE_LIMIT:
        raise ValueError(
            f"qf_type: closure has {len(free)} non-generator elements; "
            f"canonicalization is only supported up to {_FREE_LIMIT}"
        )
    # atoms restricted to the closure, extracted once before permuting labels
    rel_atoms = [
        (r.name, [tup for tup in r.tuples if all(e in in_closure for e in tup)])
        for r in s.relations
    ]
    fn_atoms = [
        (
            f.name,
            [
                (args, v)
                for args, v in f.graph
                if v in in_closure and all(a in in_closure for a in args)
            ],
        )
        for f in s.functions
    ]
    gen = tuple(gen_label[x] for x in t)

    def serial(label):
        rels = tuple(
            (name, tuple(sorted(tuple(label[e] for e in tup) for tup in atoms)))
            for name, atoms in rel_atoms
        )
        fns = tuple(
            (name, tuple(sorted((tuple(label[a] for a in args), label[v]) for args, v in atoms)))
            for name, atoms in fn_atoms
        )
        return (gen, len(closure), rels, fns)

    best = None
    for perm in itertools.permutations(free):
        label = dict(gen_label)
        for i, x in enumerate(perm):
            label[x] = k + i
        ser = serial(label)
        if best is None or ser < best:
            best = ser
    return QfType(key=best, generators=len(t), closure_size=len(closure))


def qf_type(s: FiniteStructure, t: Sequence[int]) -> QfType:
    t = tuple(t)
    for x in t:
        if not (0 <= x < s.size):
            raise ValueError(f"tuple element {x} outside universe of size {s.size}")
    memo = s._qf_memo
    if t not in memo:
        memo[t] = _qf_type_uncached(s, t)
    return memo[t]


# ---------------------------------------------------------------------------
# Consistency of a candidate pair (x -> c) against a partial injective map.
# Checks every relation tuple and function-graph entry whose support becomes
# fully assigned on either side; this makes completed maps preserve all
# relations and graphs in both directions.


def _delta_consistent(s: FiniteStructure, fwd: dict, bwd: dict, x: int, c: int) -> bool:
    trial_fwd = x, c
    for name, tup in s._rel_by_elem[x]:
        if all(e == x or e in fwd for e in tup):
            image = tuple(c if e == x else fwd[e] for e in tup)
            if image not in s.relation(name).tuples:
                return False
    for name, tup in s._rel_by_elem[c]:
        if all(e == c or e in bwd for e in tup):
            pre = tuple(x if e == c else bwd[e] for e in tup)
            if pre not in s.relation(name).tuples:
                return False
    for name, args, val in s._fn_by_elem[x]:
        support = set(args) | {val}
        if all(e == x or e in fwd for e in support):
            iargs = tuple(c if e == x else fwd[e] for e in args)
            ival = c if val == x else fwd[val]
            if s.function(name).as_dict.get(iargs) != ival:
                return False
    for name, args, val in s._fn_by_elem[c]:
        support = set(args) | {val}
        if all(e == c or e in bwd for e in support):
            pargs = tuple(x if e == c else bwd[e] for e in args)
            pval = x if val == c else bwd[val]
            if s.function(name).as_dict.get(pargs) != pval:
                return False
    return True


def _admit_pairs(s: FiniteStructure, pairs) -> tuple:
    """Build (fwd, bwd) from pairs with injectivity + atomic checks, or None."""
    fwd, bwd = {}, {}
    for a, b in pairs:
        if a in fwd:
            if fwd[a] != b:
                return None
            continue
        if b in bwd:
            return None
        if not _delta_consistent(s, fwd, bwd, a, b):
            return None
        fwd[a] = b
        bwd[b] = a
    return fwd, bwd


def automorphism_extending(s: FiniteStructure, t1: Sequence[int], t2: Sequence[int]):
    """Some automorphism of ``s`` with t1 -> t2 pointwise, or None.

    Backtracking with a most-constrained-element heuristic; sound and complete
    because pair admission checks every atom whose support just completed."""
    if len(t1) != len(t2):
        raise ValueError("tuples must have equal length")
    start = _admit_pairs(s, zip(t1, t2))
    if start is None:
        return None
    fwd, bwd = start

    def search(fwd, bwd):
        if len(fwd) == s.size:
            return dict(fwd)
        best_elem, best_cands = None, None
        for x in range(s.size):
            if x in fwd:
                continue
            cands = [c for c in range(s.size) if c not in bwd and _delta_consistent(s, fwd, bwd, x, c)]
            if not cands:
                return None
            if best_cands is None or len(cands) < len(best_cands):
                best_elem, best_cands = x, cands
                if len(cands) == 1:
                    break
        for c in best_cands:
            fwd[best_elem] = c
            bwd[c] = best_elem
            found = search(fwd, bwd)
            if found is not None:
                return found
            del fwd[best_elem]
            del bwd[c]
        return None

    return search(fwd, bwd)


def _ef_wins(s: FiniteStructure, pos: frozenset, depth: int) -> bool:
    """The duplicator survives ``depth`` more rounds from a valid position."""
    if depth == 0:
        return True
    memo = s._ef_memo
    key = (pos, depth)
    if key in memo:
        return memo[key]
    fwd = dict(pos)
    bwd = {b: a for a, b in pos}
    result = True
    stay = None  # spoiler repeats an already-placed element
    for side in (0, 1):
        dom = fwd if side == 0 else bwd
        for x in range(s.size):
            if x in dom:
                if stay is None:
                    stay = _ef_wins(s, pos, depth - 1)
                ok = stay
            else:
                ok = False
                for c in range(s.size):
                    if side == 0:
                        if c in bwd or not _delta_consistent(s, fwd, bwd, x, c):
                            continue
                        newpos = pos | {(x, c)}
                    else:
                        if c in fwd or not _delta_consistent(s, fwd, bwd, c, x):
                            continue
                        newpos = pos | {(c, x)}
                    if _ef_wins(s, newpos, depth - 1):
                        ok = True
                        break
            if not ok:
                result = False
                break
        if not result:
            break
    memo[key] = result
    return result


def _ef_equal(s: FiniteStructure, t1, t2, depth: int) -> bool:
    start = _admit_pairs(s, zip(t1, t2))
    if start is None:
        return False
    fwd, _ = start
    return _ef_wins(s, frozenset(fwd.items()), depth)


def type_equal(s: FiniteStructure, t1: Sequence[int], t2: Sequence[int], policy="orbit") -> bool:
    """Full-type equality of two tuples of ``s``.

    ``policy`` is ``"orbit"`` or ``("ef", d)`` with d >= 0.
    """
    t1, t2 = tuple(t1), tuple(t2)
    if len(t1) != len(t2):
        raise ValueError("tuples must have equal length")
    if policy != "orbit":
        tag, d = policy
        if tag != "ef" or d < 0:
            raise ValueError(f"unknown type policy {policy!r}")
    if t2 < t1:  # equality is symmetric for both policies; normalise cache keys
        t1, t2 = t2, t1
    memo = s._teq_memo
    key = (t1, t2, policy)
    if key not in memo:
        if policy == "orbit":
            memo[key] = automorphism_extending(s, t1, t2) is not None
        else:
            memo[key] = _ef_equal(s, t1, t2, policy[1])
    return memo[key]


@dataclass(frozen=True)
class PartialAutomorphism:
    """Injective partial map preserving relations and function graphs in both
    directions (graphs read relationally, restricted to the map's domain and
    range)."""

    pairs: tuple

    @classmethod
    def from_dict(cls, mapping: Mapping[int, int]) -> "PartialAutomorphism":
        return cls(tuple(sorted(mapping.items())))

    @cached_property
    def as_dict(self) -> dict:
        return dict(self.pairs)

    @cached_property
    def domain(self) -> frozenset:
        return frozenset(a for a, _ in self.pairs)

    @cached_property
    def range(self) -> frozenset:
        return frozenset(b for _, b in self.pairs)

    def apply(self, t: Sequence[int]) -> tuple:
        return tuple(self.as_dict[x] for x in t)

    def inverse(self) -> "PartialAutomorphism":
        return PartialAutomorphism(tuple(sorted((b, a) for a, b in self.pairs)))

    def violations(self, s: FiniteStructure) -> list:
        """Re-check the defining conditions against ``s``; empty means valid."""
        out = []
        fwd = self.as_dict
        if len(set(fwd.values())) != len(fwd):
            out.append("map is not injective")
            return out
        dom = set(fwd)
        rng = set(fwd.values())
        bwd = {b: a for a, b in fwd.items()}
        for r in s.relations:
            for tup in r.tuples:
                if all(e in dom for e in tup):
                    if tuple(fwd[e] for e in tup) not in r.tuples:
                        out.append(f"relation {r.name}: image of {tup} missing")
                if all(e in rng for e in tup):
                    if tuple(bwd[e] for e in tup) not in r.tuples:
                        out.append(f"relation {r.name}: preimage of {tup} missing")
        for f in s.functions:
            for args, val in f.graph:
                if val in dom and all(a in dom for a in args):
                    if f.as_dict.get(tuple(fwd[a] for a in args)) != fwd[val]:
                        out.append(f"function {f.name}: image of {(args, val)} not in graph")
                if val in rng and all(a in rng for a in args):
                    if f.as_dict.get(tuple(bwd[a] for a in args)) != bwd[val]:
                        out.append(f"function {f.name}: preimage of {(args, val)} not in graph")
        return out

    def is_valid(self, s: FiniteStructure) -> bool:
        return not self.violations(s)


def _all_extensions(s: FiniteStructure, domain: tuple) -> Iterator[dict]:
    """All injective atom-preserving maps with exactly this domain, in lex
    order of the image tuple."""

    def rec(i, fwd, bwd):
        if i == len(domain):
            yield dict(fwd)
            return
        x = domain[i]
        for c in range(s.size):
            if c in bwd or not _delta_consistent(s, fwd, bwd, x, c):
                continue
            fwd[x] = c
            bwd[c] = x
            yield from rec(i + 1, fwd, bwd)
            del fwd[x]
            del bwd[c]

    yield from rec(0, {}, {})


def partial_automorphisms(
    s: FiniteStructure, max_domain: int, closure_fns: Iterable[str] = ()
) -> Iterator[PartialAutomorphism]:
    """Yield every partial automorphism whose domain has size <= ``max_domain``
    and is closed under the functions named in ``closure_fns``.  Deterministic:
    domains by (size, lex), maps by lex order of images.  Includes the empty
    map."""
    closure_fns = tuple(closure_fns)
    for name in closure_fns:
        s.function(name)  # raises KeyError for unknown names
    if max_domain < 0:
        raise ValueError("max_domain must be >= 0")
    for k in range(max_domain + 1):
        for combo in itertools.combinations(range(s.size), k):
            if closure_fns and len(qf_closure(s, combo, closure_fns)) != len(combo):
                continue
            for fwd in _all_extensions(s, combo):
                yield PartialAutomorphism.from_dict(fwd)
