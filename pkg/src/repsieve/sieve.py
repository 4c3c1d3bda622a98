"""Staged extraction of witness-related tuple families from a represented
sequence, and the probe that turns an ordered chain into a refutation.

The sieve takes source tuples through four pigeonhole stages over their
*padded images* (images closed under subterm projections and enrichment
functions, closure elements appended deterministically):

- stage 0 groups by the canonical term-shape vector, where base leaves
  are replaced by variable indices assigned on first occurrence across
  the whole padded tuple (constants stay rigid).  Shared indexing is
  essential: it makes equal shapes mean "same terms over a renaming of
  base elements", which the witness map construction needs.
- stage 1 refines by the level pattern of the padded positions.
- stage 2 refines by the function pattern (which position maps to which
  under each partial function).
- stage 3 runs the delta-system search on the largest surviving group.

Survivors pairwise support witness partial automorphisms built purely
position-wise; the probe exploits exactly that on a chain ordered by a
formula to refute either the representation or the chain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from repsieve.finstruct import (
    FiniteStructure,
    PartialAutomorphism,
    qf_closure,
    qf_type,
    type_equal,
)
from repsieve.represent import RepresentationMap
from repsieve.sunflower import (
    DeltaSystemFailure,
    SunflowerCertificate,
    delta_system,
    validate_sunflower,
)
from repsieve.termalg import AlgebraSignature, TermAlgebra
from repsieve.enrich import trivial_enrichment

__all__ = [
    "SieveBottleneck",
    "SieveTrace",
    "IndiscernibilityCertificate",
    "ProbeReport",
    "sieve",
    "validate_trace",
    "witness_automorphism",
    "verify_indiscernible",
    "indiscernibility_certificate",
    "instability_probe",
]


class SieveBottleneck(Exception):
    """Raised when the first stage whose largest group is too small blocks
    the requested survivor count."""

    def __init__(self, stage: str, largest: int, target: int, inconclusive: bool = False):
        self.stage = stage
        self.largest = largest
        self.target = target
        self.inconclusive = inconclusive
        flavor = " (inconclusive: only the greedy packing ran)" if inconclusive else ""
        super().__init__(
            f"{stage}: largest compatible group has {largest} members, "
            f"target is {target}{flavor}"
        )


def _render_shape(shape) -> str:
    if shape[0] == "v":
        return f"v{shape[1]}"
    _, sym, *children = shape
    if not children:
        return sym
    return f"{sym}({', '.join(_render_shape(c) for c in children)})"


@dataclass(frozen=True)
class SieveTrace:
    r: RepresentationMap
    tuples: tuple  # source tuples, as given
    padded: tuple  # per input: image tuple followed by its closure, term ids
    xi: int  # padded length of the chosen group
    stage0: tuple  # groups of input indices, largest first
    stage0_keys: tuple  # rendered shape vector per stage0 group
    stage1: tuple
    stage1_keys: tuple  # frozenset of (position, level) per group
    stage2: tuple
    stage2_keys: tuple  # frozenset of (function, position, position) per group
    chosen: tuple  # the stage2 group handed to the delta-system search
    certificate: SunflowerCertificate  # over the chosen group's padded tuples
    s3: tuple  # surviving input indices

    @property
    def agree_idx(self) -> frozenset:
        return self.certificate.agree_idx

    @property
    def rep_equiv(self) -> tuple:
        return self.certificate.rep_equiv

    @property
    def root(self) -> frozenset:
        return self.certificate.root

    def survivor_counts(self) -> dict:
        return {
            "input": len(self.tuples),
            "stage0": len(self.stage0[0]) if self.stage0 else 0,
            "stage1": len(self.stage1[0]) if self.stage1 else 0,
            "stage2": len(self.stage2[0]) if self.stage2 else 0,
            "stage3": len(self.s3),
        }


def _padded_image(r: RepresentationMap, t) -> tuple:
    image = r.image(t)
    closure = qf_closure(r.target, image)
    seen_in_image = []
    seen = set()
    for y in image:
        if y not in seen:
            seen.add(y)
            seen_in_image.append(y)
    return tuple(image) + tuple(closure[len(seen_in_image):])


def _shape_vector(ta: TermAlgebra, padded) -> tuple:
    varmap: dict = {}

    def shape(tid):
        t = ta.term(tid)
        if t.is_base:
            if tid not in varmap:
                varmap[tid] = len(varmap)
            return ("v", varmap[tid])
        return ("a", t.sym) + tuple(shape(ta.term_id(c)) for c in t.args)

    return tuple(shape(i) for i in padded)


def _group(indices, key_of) -> list:
    groups: dict = {}
    for i in indices:
        groups.setdefault(key_of(i), []).append(i)
    return sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[1][0]))


def sieve(
    r: RepresentationMap,
    tuples: Sequence[Sequence[int]],
    target: int = 2,
    exhaustive_threshold: int = 200,
) -> SieveTrace:
    """Run the four-stage extraction; raises :class:`SieveBottleneck` naming
    the first stage whose largest group cannot reach ``target``."""
    if r.carrier is None:
        raise ValueError("sieve needs a representation over a term carrier")
    tuples = tuple(tuple(t) for t in tuples)
    if not tuples:
        raise ValueError("need at least one tuple")
    if target < 2:
        raise ValueError("target must be >= 2")
    ta = r.carrier
    padded = tuple(_padded_image(r, t) for t in tuples)
    shapes = {i: _shape_vector(ta, padded[i]) for i in range(len(tuples))}
    if r.enrichment is not None:
        level_of = r.enrichment.level_of
    else:
        level_of = {e: 0 for e in range(r.target.size)}

    stage0 = _group(range(len(tuples)), lambda i: shapes[i])
    if len(stage0[0][1]) < target:
        raise SieveBottleneck("stage0", len(stage0[0][1]), target)

    def r1_of(i):
        return frozenset(
            (pos, level_of[tid]) for pos, tid in enumerate(padded[i])
        )

    stage1 = []
    for _, members in stage0:
        stage1.extend(_group(members, r1_of))
    stage1.sort(key=lambda kv: (-len(kv[1]), kv[1][0]))
    if len(stage1[0][1]) < target:
        raise SieveBottleneck("stage1", len(stage1[0][1]), target)

    fn_dicts = [(f.name, f.as_dict) for f in r.target.functions]

    def r2_of(i):
        row = padded[i]
        pat = set()
        for name, graph in fn_dicts:
            for z0, tid in enumerate(row):
                val = graph.get((tid,))
                if val is None:
                    continue
                for z1, other in enumerate(row):
                    if other == val:
                        pat.add((name, z0, z1))
        return frozenset(pat)

    stage2 = []
    for _, members in stage1:
        stage2.extend(_group(members, r2_of))
    stage2.sort(key=lambda kv: (-len(kv[1]), kv[1][0]))
    if len(stage2[0][1]) < target:
        raise SieveBottleneck("stage2", len(stage2[0][1]), target)

    chosen = tuple(stage2[0][1])
    family = [padded[i] for i in chosen]
    outcome = delta_system(family, target, exhaustive_threshold)
    if isinstance(outcome, DeltaSystemFailure):
        raise SieveBottleneck("stage3", len(chosen), target, outcome.inconclusive)
    s3 = tuple(chosen[k] for k in outcome.selected)
    return SieveTrace(
        r=r,
        tuples=tuples,
        padded=padded,
        xi=len(family[0]),
        stage0=tuple(tuple(m) for _, m in stage0),
        stage0_keys=tuple(
            tuple(_render_shape(s) for s in key) for key, _ in stage0
        ),
        stage1=tuple(tuple(m) for _, m in stage1),
        stage1_keys=tuple(key for key, _ in stage1),
        stage2=tuple(tuple(m) for _, m in stage2),
        stage2_keys=tuple(key for key, _ in stage2),
        chosen=chosen,
        certificate=outcome,
        s3=s3,
    )


def validate_trace(trace: SieveTrace) -> list:
    """Re-derive every trace invariant from the raw inputs; empty = valid."""
    out = []
    r = trace.r
    if r.carrier is None:
        return ["trace has no term carrier"]
    n = len(trace.tuples)
    for i in range(n):
        if trace.padded[i] != _padded_image(r, trace.tuples[i]):
            out.append(f"padded tuple {i} does not match recomputation")
    for stage_name, groups in (("stage0", trace.stage0), ("stage1", trace.stage1), ("stage2", trace.stage2)):
        flat = sorted(i for g in groups for i in g)
        if flat != list(range(n)):
            out.append(f"{stage_name} groups do not partition the inputs")
    shapes = {i: _shape_vector(r.carrier, trace.padded[i]) for i in range(n)}
    for g in trace.stage0:
        if len({shapes[i] for i in g}) != 1:
            out.append(f"stage0 group {g} has mixed shapes")
    level_of = (
        r.enrichment.level_of
        if r.enrichment is not None
        else {e: 0 for e in range(r.target.size)}
    )
    for g in trace.stage1:
        pats = {
            frozenset((pos, level_of[tid]) for pos, tid in enumerate(trace.padded[i]))
            for i in g
        }
        if len(pats) != 1:
            out.append(f"stage1 group {g} has mixed level patterns")
    for g in trace.stage2:
        pats = set()
        for i in g:
            row = trace.padded[i]
            pat = set()
            for f in r.target.functions:
                for z0, tid in enumerate(row):
                    val = f.as_dict.get((tid,))
                    if val is not None:
                        pat.update(
                            (f.name, z0, z1) for z1, other in enumerate(row) if other == val
                        )
            pats.add(frozenset(pat))
        if len(pats) != 1:
            out.append(f"stage2 group {g} has mixed function patterns")
    family = [trace.padded[i] for i in trace.chosen]
    out.extend(validate_sunflower(family, trace.certificate))
    expect_s3 = tuple(trace.chosen[k] for k in trace.certificate.selected)
    if trace.s3 != expect_s3:
        out.append("survivor list does not match the certificate's selection")
    # cross-tuple equalities may only happen at agreement positions
    u = trace.agree_idx
    for a, b in itertools.combinations(trace.s3, 2):
        for i, x in enumerate(trace.padded[a]):
            for j, y in enumerate(trace.padded[b]):
                if x == y and not (i in u and j in u):
                    out.append(
                        f"tuples {a} and {b} share a value at positions {i},{j} outside {sorted(u)}"
                    )
    return out


def witness_automorphism(trace: SieveTrace, u: Sequence[int], v: Sequence[int]) -> PartialAutomorphism:
    """The position-wise map sending the padded images of the ``v`` survivors
    onto those of the ``u`` survivors.  Valid whenever both sequences stay
    inside the survivor set; the trace invariants make it well-defined,
    injective, and atom-preserving, and this is rechecked here."""
    u, v = tuple(u), tuple(v)
    if len(u) != len(v):
        raise ValueError("index sequences must have equal length")
    if len(set(u)) != len(u) or len(set(v)) != len(v):
        raise ValueError("index sequences must be repetition-free")
    s3 = set(trace.s3)
    for k in itertools.chain(u, v):
        if k not in s3:
            raise ValueError(f"index {k} is not a survivor")
    mapping: dict = {}
    for uk, vk in zip(u, v):
        for x, y in zip(trace.padded[vk], trace.padded[uk]):
            if mapping.setdefault(x, y) != y:
                raise ValueError(
                    f"witness is not well-defined: {x} would map to both "
                    f"{mapping[x]} and {y}"
                )
    pa = PartialAutomorphism.from_dict(mapping)
    problems = pa.violations(trace.r.target)
    if problems:
        raise ValueError("witness fails to be a partial automorphism: " + "; ".join(problems))
    return pa


def verify_indiscernible(
    m, tuples: Sequence[Sequence[int]], idx, length: int, policy="orbit"
) -> bool:
    """Brute-force set-indiscernibility check: all repetition-free index
    sequences of each length up to ``length`` must give type-equal
    concatenations.  Transitivity lets every sequence be compared to the
    first one only."""
    idx = sorted(idx)
    if length > len(idx):
        raise ValueError("length exceeds the number of indices")
    tuples = [tuple(t) for t in tuples]
    for ell in range(1, length + 1):
        seqs = list(itertools.permutations(idx, ell))
        first = seqs[0]
        ref = tuple(x for k in first for x in tuples[k])
        for s in seqs[1:]:
            cat = tuple(x for k in s for x in tuples[k])
            if not type_equal(m, ref, cat, policy):
                return False
    return True


@dataclass(frozen=True)
class IndiscernibilityCertificate:
    selected: tuple
    witnesses: tuple  # ((i, j), PartialAutomorphism) for ordered pairs
    verified_length: int

    def witness_for(self, i: int, j: int) -> PartialAutomorphism:
        return dict(self.witnesses)[(i, j)]


def indiscernibility_certificate(
    trace: SieveTrace, length: int, policy="orbit"
) -> IndiscernibilityCertificate:
    """Bundle the per-pair witnesses with a source-side verification."""
    witnesses = []
    for i, j in itertools.permutations(trace.s3, 2):
        witnesses.append(((i, j), witness_automorphism(trace, (i,), (j,))))
    if not verify_indiscernible(trace.r.source, trace.tuples, trace.s3, length, policy):
        raise ValueError("survivors are not indiscernible on the source side")
    return IndiscernibilityCertificate(
        selected=trace.s3, witnesses=tuple(witnesses), verified_length=length
    )


@dataclass(frozen=True)
class ProbeReport:
    status: str  # "representation_refuted" | "chain_refuted" | "inconclusive"
    pair: tuple | None = None  # chain indices (i, j) the refutation rests on
    forward: tuple | None = None  # source tuple ordered i before j
    backward: tuple | None = None  # source tuple ordered j before i
    detail: str = ""

    @property
    def refuted(self) -> bool:
        return self.status in ("representation_refuted", "chain_refuted")


def _lift_to_terms(r: RepresentationMap) -> RepresentationMap:
    """View a term-free target as a term carrier with no symbols, keeping
    the target's relations so witness validation still sees them."""
    if r.target.functions:
        raise ValueError(
            "can only lift a function-free target to a term carrier"
        )
    ta = TermAlgebra.build(AlgebraSignature.make({}), r.target.size, 0)
    base = ta.as_structure
    relations = {rel.name: (rel.arity, rel.tuples) for rel in r.target.relations}
    relations.update(
        {rel.name: (rel.arity, rel.tuples) for rel in base.relations}
    )
    target = FiniteStructure.make(base.size, relations=relations)
    enr = trivial_enrichment(target)
    return RepresentationMap(r.source, enr.apply(target), r.f, carrier=ta, enrichment=enr)


def instability_probe(
    r: RepresentationMap,
    phi,
    chain: Sequence[Sequence[int]],
    delta="orbit",
) -> ProbeReport:
    """Refute a representation (or the chain handed in) from a formula-ordered
    chain of source tuples.

    ``phi`` is either the name of a source relation of the concatenated
    arity, or a callable ``phi(source, left, right) -> bool``.  The chain
    must be strictly ordered by ``phi`` in both directions; that is checked
    first and rejected outright when it fails.
    """
    chain = tuple(tuple(t) for t in chain)
    if not chain:
        raise ValueError("chain precondition failure: empty chain")
    if isinstance(phi, str):
        if phi not in (rel.name for rel in r.source.relations):
            raise ValueError(f"chain precondition failure: unknown relation {phi!r}")
        rel = r.source.relation(phi)

        def holds(a, b):
            cat = a + b
            if len(cat) != rel.arity:
                raise ValueError(
                    f"chain precondition failure: relation {phi} has arity "
                    f"{rel.arity}, tuples concatenate to {len(cat)}"
                )
            return cat in rel.tuples

    elif callable(phi):
        def holds(a, b):
            return bool(phi(r.source, a, b))

    else:
        raise ValueError("phi must be a relation name or a callable")
    for i, j in itertools.product(range(len(chain)), repeat=2):
        if holds(chain[i], chain[j]) != (i < j):
            raise ValueError(
                f"chain precondition failure: phi(chain[{i}], chain[{j}]) "
                f"should be {i < j}"
            )
    if len(chain) < 2:
        return ProbeReport(status="inconclusive", detail="chain has fewer than two tuples")
    lifted = r if r.carrier is not None else _lift_to_terms(r)
    try:
        trace = sieve(lifted, chain, target=2)
    except SieveBottleneck as exc:
        return ProbeReport(status="inconclusive", detail=str(exc))
    i, j = sorted(trace.s3)[:2]
    witness_automorphism(trace, (i, j), (j, i))  # raises if ill-formed
    forward = chain[i] + chain[j]
    backward = chain[j] + chain[i]
    qf_fwd = qf_type(lifted.target, lifted.image(forward))
    qf_bwd = qf_type(lifted.target, lifted.image(backward))
    if qf_fwd != qf_bwd:
        return ProbeReport(
            status="inconclusive",
            pair=(i, j),
            forward=forward,
            backward=backward,
            detail="witness exists but the image types disagree; nothing to refute",
        )
    if not type_equal(r.source, forward, backward, delta):
        return ProbeReport(
            status="representation_refuted",
            pair=(i, j),
            forward=forward,
            backward=backward,
            detail=(
                "images of the two orderings share a qf type, so a good "
                "representation would force the orderings to be type-equal; "
                "phi separates them"
            ),
        )
    return ProbeReport(
        status="chain_refuted",
        pair=(i, j),
        forward=forward,
        backward=backward,
        detail=(
            "the two orderings are type-equal on the source, so phi cannot "
            "order the chain the way the precondition claimed"
        ),
    )
