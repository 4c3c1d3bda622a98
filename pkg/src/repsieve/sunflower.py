"""Delta-system (sunflower) certificates over families of value sequences.

A certificate names a subfamily whose members pairwise intersect, as
value sets, in exactly one common root; additionally the root values
occupy the same positions with the same arrangement in every selected
sequence, every selected sequence has the same internal repetition
pattern, and all of this is rechecked by an independent validator.

Positions matter: two sequences that share values at different positions
cannot be selected together.  This positional strengthening is what
downstream well-definedness arguments (mapping one selected tuple onto
another position-wise) rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

__all__ = [
    "SunflowerCertificate",
    "DeltaSystemFailure",
    "delta_system",
    "regressive_fiber",
    "validate_sunflower",
]


@dataclass(frozen=True)
class SunflowerCertificate:
    selected: tuple  # family indices, ascending
    root: frozenset  # common pairwise value-set intersection
    common_length: int
    agree_idx: frozenset  # positions where all selected sequences agree
    rep_equiv: tuple  # partition of positions by within-sequence value equality
    mode: str  # "exhaustive" | "greedy"

    def equiv_pairs(self) -> frozenset:
        return frozenset(
            (i, j) for cls in self.rep_equiv for i in cls for j in cls
        )


@dataclass(frozen=True)
class DeltaSystemFailure:
    target: int
    reason: str
    inconclusive: bool  # true when only the greedy packing was tried somewhere


def regressive_fiber(f: Mapping[int, int]) -> tuple:
    """Largest fiber of a regressive map; ties broken by smallest value.

    Finite stand-in for a pressing-down argument: some value is hit by at
    least ``len(f) / len(values)`` arguments.
    """
    if not f:
        raise ValueError("regressive map must have nonempty domain")
    for i, v in f.items():
        if not v < i:
            raise ValueError(f"map is not regressive at {i}: f({i}) = {v}")
    fibers: dict = {}
    for i, v in f.items():
        fibers.setdefault(v, set()).add(i)
    best = max(fibers, key=lambda v: (len(fibers[v]), -v))
    return best, frozenset(fibers[best])


def _equiv_partition(seq: Sequence) -> tuple:
    by_value: dict = {}
    for i, v in enumerate(seq):
        by_value.setdefault(v, []).append(i)
    return tuple(sorted(tuple(ps) for ps in by_value.values()))


def _greedy_pack(candidates, petals):
    chosen = []
    used: set = set()
    for idx in candidates:
        if petals[idx] & used:
            continue
        chosen.append(idx)
        used |= petals[idx]
    return chosen


def _exact_pack(candidates, petals, target):
    """Some pairwise petal-disjoint subset of size >= target, or None.
    Complete: explores all subsets, pruned by remaining count."""

    n = len(candidates)
    chosen: list = []

    def rec(start, used):
        if len(chosen) >= target:
            return True
        if len(chosen) + (n - start) < target:
            return False
        for k in range(start, n):
            idx = candidates[k]
            if petals[idx] & used:
                continue
            chosen.append(idx)
            if rec(k + 1, used | petals[idx]):
                return True
            chosen.pop()
        return False

    if rec(0, frozenset()):
        return chosen
    return None


def delta_system(
    family: Sequence[Sequence], target: int, exhaustive_threshold: int = 200
):
    """Find a sunflower certificate with at least ``target`` selected members.

    Search is layered pigeonhole: group by sequence length, then by the
    repetition partition; within a group, candidate roots are the pairwise
    value-set intersections; sequences containing a candidate root are
    refined by where the root values sit; finally petal-disjoint packing,
    exhaustive below the group-size threshold and greedy above it.  Returns
    a :class:`SunflowerCertificate` or a :class:`DeltaSystemFailure` (the
    latter flagged inconclusive when only greedy packing was attempted).
    """
    if not family:
        raise ValueError("family must be nonempty")
    if target < 2:
        raise ValueError("target must be >= 2")
    seqs = [tuple(s) for s in family]
    groups: dict = {}
    for idx, s in enumerate(seqs):
        groups.setdefault((len(s), _equiv_partition(s)), []).append(idx)
    any_greedy_limited = False
    best_blocker = None
    for (length, equiv), members in sorted(
        groups.items(), key=lambda kv: (-len(kv[1]), kv[1][0])
    ):
        if len(members) < target:
            if best_blocker is None:
                best_blocker = (
                    f"largest repetition-pattern group has {len(members)} members, "
                    f"target is {target}"
                )
            continue
        exhaustive = len(members) <= exhaustive_threshold
        value_sets = {i: frozenset(seqs[i]) for i in members}
        roots = sorted(
            {
                value_sets[a] & value_sets[b]
                for a, b in itertools.combinations(members, 2)
            },
            key=lambda s: (len(s), sorted(s)),
        )
        for root in roots:
            containing = [i for i in members if root <= value_sets[i]]
            arrangements: dict = {}
            for i in containing:
                positions = tuple(p for p, v in enumerate(seqs[i]) if v in root)
                values = tuple(seqs[i][p] for p in positions)
                arrangements.setdefault((positions, values), []).append(i)
            for key in sorted(arrangements):
                cands = arrangements[key]
                if len(cands) < target:
                    continue
                petals = {i: value_sets[i] - root for i in cands}
                chosen = _greedy_pack(cands, petals)
                if len(chosen) < target and exhaustive:
                    chosen = _exact_pack(cands, petals, target) or []
                if len(chosen) < target:
                    if not exhaustive:
                        any_greedy_limited = True
                    continue
                selected = tuple(sorted(chosen))
                agree = frozenset(
                    p
                    for p in range(length)
                    if len({seqs[i][p] for i in selected}) == 1
                )
                return SunflowerCertificate(
                    selected=selected,
                    root=root,
                    common_length=length,
                    agree_idx=agree,
                    rep_equiv=equiv,
                    mode="exhaustive" if exhaustive else "greedy",
                )
        if best_blocker is None:
            best_blocker = (
                f"no petal-disjoint aligned subfamily of size {target} in the "
                f"largest group ({len(members)} members)"
            )
    return DeltaSystemFailure(
        target=target,
        reason=best_blocker or f"no group offers {target} members",
        inconclusive=any_greedy_limited,
    )


def validate_sunflower(family: Sequence[Sequence], cert: SunflowerCertificate) -> list:
    """Independent recheck of every certificate invariant against the raw
    family.  Empty list means the certificate is valid."""
    out = []
    seqs = [tuple(s) for s in family]
    for i in cert.selected:
        if not (0 <= i < len(seqs)):
            return [f"selected index {i} outside the family"]
    sel = [seqs[i] for i in cert.selected]
    for i, s in zip(cert.selected, sel):
        if len(s) != cert.common_length:
            out.append(f"sequence {i} has length {len(s)}, certificate says {cert.common_length}")
    if out:
        return out
    for (i, s), (j, t) in itertools.combinations(zip(cert.selected, sel), 2):
        inter = frozenset(s) & frozenset(t)
        if inter != cert.root:
            out.append(f"value sets of {i} and {j} intersect in {sorted(inter)}, not the root")
    true_agree = {
        p for p in range(cert.common_length) if len({s[p] for s in sel}) == 1
    }
    if true_agree != set(cert.agree_idx):
        out.append(
            f"agreement positions are {sorted(true_agree)}, certificate says {sorted(cert.agree_idx)}"
        )
    for i, s in zip(cert.selected, sel):
        at_agree = {s[p] for p in cert.agree_idx}
        if at_agree != set(cert.root):
            out.append(f"values of {i} at the agreement positions are {sorted(at_agree)}, not the root")
    pair_of = {}
    all_positions = [p for cls in cert.rep_equiv for p in cls]
    for cls in cert.rep_equiv:
        for p in cls:
            pair_of[p] = cls
    if sorted(all_positions) != list(range(cert.common_length)):
        out.append("repetition partition does not cover the positions exactly")
        return out
    for i, s in zip(cert.selected, sel):
        for p, q in itertools.combinations(range(cert.common_length), 2):
            same_cls = pair_of[p] is pair_of[q]
            if (s[p] == s[q]) != same_cls:
                out.append(
                    f"sequence {i}: positions {p},{q} "
                    f"{'agree' if s[p] == s[q] else 'differ'} but the partition says otherwise"
                )
                return out
    return out
