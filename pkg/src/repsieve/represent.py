"""Representation checkers.

A representation map sends a source structure into an enriched carrier.
It is *good* when quantifier-free type equality of image tuples forces
full type equality of the preimage tuples.  Two checkers test this on
all tuples up to a length bound:

``check_representation``
    groups tuples by the qf type of their images and compares each group
    member against the group's first representative on the source side.

``check_by_partial_automorphisms``
    enumerates function-closed subsets of the range together with the
    partial automorphisms of the carrier defined on them (domain and
    range both closed), and checks every pair of source tuples such a
    map matches up.  On inputs where both run within their bounds the
    two checkers accept exactly the same maps.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from repsieve.enrich import Enrichment
from repsieve.finstruct import (
    FiniteStructure,
    _all_extensions,
    qf_closure,
    qf_type,
    type_equal,
)
from repsieve.termalg import TermAlgebra

__all__ = [
    "RepresentationMap",
    "CheckerPolicy",
    "ViolationEntry",
    "ViolationReport",
    "check_representation",
    "check_by_partial_automorphisms",
]


@dataclass(frozen=True)
class RepresentationMap:
    """Total map from the source universe into the target structure.

    ``target`` is the fully enriched carrier; when it came from a term
    table, ``carrier`` keeps the table for rendering and for the sieve,
    and ``enrichment`` keeps the level data.  The range must be closed
    under the target's partial functions; ``validate`` checks that.
    """

    source: FiniteStructure
    target: FiniteStructure
    f: tuple
    carrier: TermAlgebra | None = None
    enrichment: Enrichment | None = None

    @classmethod
    def make(cls, source, target, mapping, carrier=None, enrichment=None):
        if isinstance(mapping, dict):
            mapping = [mapping[i] for i in range(source.size)]
        return cls(source, target, tuple(mapping), carrier, enrichment)

    def image(self, t: Sequence[int]) -> tuple:
        return tuple(self.f[x] for x in t)

    @cached_property
    def fibers(self) -> dict:
        out: dict = {}
        for x, y in enumerate(self.f):
            out.setdefault(y, []).append(x)
        return {y: tuple(xs) for y, xs in out.items()}

    def describe(self, x: int) -> str:
        """Human-readable image of a source element."""
        y = self.f[x]
        if self.carrier is not None:
            return self.carrier.term(y).render()
        return str(y)

    def validate(self) -> list:
        out = []
        if len(self.f) != self.source.size:
            out.append(f"map covers {len(self.f)} elements, source has {self.source.size}")
        for x, y in enumerate(self.f):
            if not (0 <= y < self.target.size):
                out.append(f"f({x}) = {y} outside target universe")
        rng = sorted(set(self.f))
        closed = set(qf_closure(self.target, rng))
        extra = closed - set(rng)
        if extra:
            out.append(f"range not closed under target functions; missing {sorted(extra)}")
        return out


@dataclass(frozen=True)
class CheckerPolicy:
    """Source-side type oracle and tuple length bound.  Image types are
    always quantifier-free."""

    delta: object = "orbit"  # "orbit" | ("ef", d)
    max_tuple_len: int = 2

    def __post_init__(self):
        if self.max_tuple_len < 1:
            raise ValueError("max_tuple_len must be >= 1")
        if self.delta != "orbit":
            if not (
                isinstance(self.delta, tuple)
                and len(self.delta) == 2
                and self.delta[0] == "ef"
                and isinstance(self.delta[1], int)
                and self.delta[1] >= 0
            ):
                raise ValueError(f"delta must be 'orbit' or ('ef', d), got {self.delta!r}")


@dataclass(frozen=True)
class ViolationEntry:
    a: tuple
    b: tuple
    image_a: tuple
    image_b: tuple
    separation: str

    def swapped(self) -> "ViolationEntry":
        return ViolationEntry(self.b, self.a, self.image_b, self.image_a, self.separation)


@dataclass(frozen=True)
class ViolationReport:
    checker: str
    delta: object
    max_tuple_len: int
    entries: tuple = ()
    checked: int = 0
    params: tuple = ()  # extra (name, value) pairs, checker-specific

    @property
    def empty(self) -> bool:
        return not self.entries

    def pairs(self) -> list:
        return [(e.a, e.b) for e in self.entries]


def _reject_degenerate(source: FiniteStructure, policy: CheckerPolicy):
    if policy.delta == ("ef", 0) and any(r.tuples for r in source.relations):
        raise ValueError(
            "source-side depth 0 cannot separate anything the relations see; "
            "use depth >= 1 or the orbit oracle"
        )


def _validated(r: RepresentationMap):
    problems = r.validate()
    if problems:
        raise ValueError("invalid representation map: " + "; ".join(problems))


def _image_types(r: RepresentationMap, tuples: list, workers: int) -> list:
    if workers <= 1:
        return [qf_type(r.target, r.image(t)) for t in tuples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: qf_type(r.target, r.image(t)), tuples))


def check_representation(
    r: RepresentationMap, policy: CheckerPolicy = CheckerPolicy(), workers: int = 1
) -> ViolationReport:
    """Exhaustive tuple-comparison checker.

    Walks all source tuples of each length up to the bound in lexicographic
    order; within each class of qf-equal images, compares every member to
    the first-seen representative with the source-side oracle.  Emptiness
    of the report is equivalent to the representation property at this
    length bound, by transitivity of both equivalences.
    """
    _validated(r)
    _reject_degenerate(r.source, policy)
    entries = []
    checked = 0
    for length in range(1, policy.max_tuple_len + 1):
        tuples = list(itertools.product(range(r.source.size), repeat=length))
        types = _image_types(r, tuples, workers)
        reps: dict = {}
        for t, tp in zip(tuples, types):
            rep = reps.setdefault(tp, t)
            if rep is t:
                continue
            checked += 1
            if not type_equal(r.source, t, rep, policy.delta):
                entries.append(
                    ViolationEntry(
                        a=t,
                        b=rep,
                        image_a=r.image(t),
                        image_b=r.image(rep),
                        separation=f"images share a qf type but source types differ under {policy.delta}",
                    )
                )
    return ViolationReport(
        checker="tuple-comparison",
        delta=policy.delta,
        max_tuple_len=policy.max_tuple_len,
        entries=tuple(entries),
        checked=checked,
    )


def check_by_partial_automorphisms(
    r: RepresentationMap,
    policy: CheckerPolicy = CheckerPolicy(),
    max_domain: int = 8,
    workers: int = 1,
) -> ViolationReport:
    """Partial-automorphism checker.

    Enumerates every function-closed set U obtained by closing the image
    set of a tuple (length <= the bound), then every partial automorphism
    of the target with domain U and function-closed range.  Whenever such
    a map sends the image of one source tuple onto the image of another,
    the two source tuples must be type-equal; otherwise the pair is
    reported.  ``max_domain`` must dominate every such closure size, else
    the search would be inconclusive and is rejected.
    """
    _validated(r)
    _reject_degenerate(r.source, policy)
    rng = sorted(set(r.f))
    domains = {}
    for k in range(1, policy.max_tuple_len + 1):
        for combo in itertools.combinations(rng, k):
            u = tuple(sorted(qf_closure(r.target, combo)))
            domains[u] = None
    biggest = max((len(u) for u in domains), default=0)
    if biggest > max_domain:
        raise ValueError(
            f"max_domain={max_domain} is below the largest image closure ({biggest}); "
            "the search would be inconclusive"
        )
    # precompute image data for all source tuples up to the bound
    tuples_by_len = {
        length: list(itertools.product(range(r.source.size), repeat=length))
        for length in range(1, policy.max_tuple_len + 1)
    }
    images = {
        length: [(t, r.image(t), frozenset(r.image(t))) for t in tuples_by_len[length]]
        for length in tuples_by_len
    }
    def handle_domain(u):
        uset = set(u)
        relevant = [
            (t, img)
            for length in images
            for (t, img, imgset) in images[length]
            if imgset <= uset
        ]
        found = []
        checks = 0
        for fwd in _all_extensions(r.target, u):
            img_range = set(fwd.values())
            if set(qf_closure(r.target, sorted(img_range))) != img_range:
                continue  # range must be closed too, or qf-equality may fail
            for t, img in relevant:
                mapped = tuple(fwd[y] for y in img)
                fiber_sets = [r.fibers.get(y) for y in mapped]
                if any(fs is None for fs in fiber_sets):
                    continue
                for b in itertools.product(*fiber_sets):
                    checks += 1
                    if not type_equal(r.source, t, b, policy.delta):
                        found.append(
                            ViolationEntry(
                                a=t,
                                b=b,
                                image_a=img,
                                image_b=mapped,
                                separation=(
                                    "a partial automorphism with closed domain and range "
                                    f"matches the images but source types differ under {policy.delta}"
                                ),
                            )
                        )
        return found, checks

    ordered = sorted(domains, key=lambda d: (len(d), d))
    if workers <= 1:
        results = [handle_domain(u) for u in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(handle_domain, ordered))
    entries = []
    checked = 0
    seen_pairs = set()
    for found, checks in results:
        checked += checks
        for e in found:
            if (e.a, e.b) not in seen_pairs:
                seen_pairs.add((e.a, e.b))
                entries.append(e)
    entries.sort(key=lambda e: (len(e.a), e.a, e.b))
    return ViolationReport(
        checker="partial-automorphism",
        delta=policy.delta,
        max_tuple_len=policy.max_tuple_len,
        entries=tuple(entries),
        checked=checked,
        params=(("max_domain", max_domain),),
    )
