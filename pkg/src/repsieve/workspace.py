"""JSON workspace documents.

One self-describing file carries named structures, enrichments, term
signatures, representation maps, and theory specs, so commands can feed
each other without path plumbing.  Rendering is canonical: section keys
are sorted, everything else follows the deterministic order the objects
themselves carry, so identical inputs give identical bytes and
``parse(render(ws))`` returns an equal workspace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from repsieve.enrich import Enrichment
from repsieve.finstruct import FiniteStructure
from repsieve.represent import RepresentationMap
from repsieve.termalg import AlgebraSignature, TermAlgebra
from repsieve.theories import TheorySpec

__all__ = [
    "SCHEMA_VERSION",
    "WorkspaceError",
    "RepresentationEntry",
    "Workspace",
    "parse_workspace",
    "render_workspace",
    "load_workspace",
    "save_workspace",
]

SCHEMA_VERSION = 1


class WorkspaceError(ValueError):
    """Malformed document; the message names the offending field."""


@dataclass(frozen=True)
class RepresentationEntry:
    """A representation stored by reference into the named sections."""

    source: str
    target: str
    map: tuple
    carrier: str = None
    enrichment: str = None


@dataclass
class Workspace:
    version: int = SCHEMA_VERSION
    structures: dict = field(default_factory=dict)
    enrichments: dict = field(default_factory=dict)
    signatures: dict = field(default_factory=dict)  # name -> TermAlgebra
    representations: dict = field(default_factory=dict)  # name -> RepresentationEntry
    theories: dict = field(default_factory=dict)  # name -> TheorySpec

    def representation(self, name: str) -> RepresentationMap:
        """Resolve a stored entry into a live representation map."""
        if name not in self.representations:
            raise WorkspaceError(f"representations.{name}: no such entry")
        e = self.representations[name]
        for section, ref in (("structures", e.source), ("structures", e.target)):
            if ref not in getattr(self, section):
                raise WorkspaceError(f"representations.{name}: unresolved reference {ref!r}")
        carrier = None
        if e.carrier is not None:
            if e.carrier not in self.signatures:
                raise WorkspaceError(
                    f"representations.{name}: unresolved signature {e.carrier!r}"
                )
            carrier = self.signatures[e.carrier]
        enrichment = None
        if e.enrichment is not None:
            if e.enrichment not in self.enrichments:
                raise WorkspaceError(
                    f"representations.{name}: unresolved enrichment {e.enrichment!r}"
                )
            enrichment = self.enrichments[e.enrichment]
        return RepresentationMap.make(
            self.structures[e.source],
            self.structures[e.target],
            list(e.map),
            carrier=carrier,
            enrichment=enrichment,
        )

    def add_representation(self, name: str, r: RepresentationMap) -> str:
        """Store a live representation map and everything it references."""
        self.structures[f"{name}.source"] = r.source
        self.structures[f"{name}.target"] = r.target
        carrier = enrichment = None
        if r.carrier is not None:
            carrier = f"{name}.carrier"
            self.signatures[carrier] = r.carrier
        if r.enrichment is not None:
            enrichment = f"{name}.enrichment"
            self.enrichments[enrichment] = r.enrichment
        self.representations[name] = RepresentationEntry(
            source=f"{name}.source",
            target=f"{name}.target",
            map=tuple(r.f),
            carrier=carrier,
            enrichment=enrichment,
        )
        return name


def _structure_doc(s: FiniteStructure) -> dict:
    return {
        "universe": s.size,
        "relations": [
            {
                "name": r.name,
                "arity": r.arity,
                "tuples": sorted(list(t) for t in r.tuples),
            }
            for r in s.relations
        ],
        "functions": [
            {
                "name": f.name,
                "arity": f.arity,
                "graph": [list(args) + [value] for args, value in f.graph],
            }
            for f in s.functions
        ],
    }


def _structure_parse(doc, where: str) -> FiniteStructure:
    _expect_keys(doc, where, {"universe"}, {"relations", "functions"})
    relations = {}
    for i, rel in enumerate(doc.get("relations", [])):
        here = f"{where}.relations[{i}]"
        _expect_keys(rel, here, {"name", "arity", "tuples"}, set())
        relations[rel["name"]] = (rel["arity"], [tuple(t) for t in rel["tuples"]])
    functions = {}
    for i, fn in enumerate(doc.get("functions", [])):
        here = f"{where}.functions[{i}]"
        _expect_keys(fn, here, {"name", "arity", "graph"}, set())
        arity = fn["arity"]
        graph = {}
        for row in fn["graph"]:
            if len(row) != arity + 1:
                raise WorkspaceError(f"{here}: graph row {row} does not fit arity {arity}")
            graph[tuple(row[:arity])] = row[arity]
        functions[fn["name"]] = (arity, graph)
    try:
        return FiniteStructure.make(doc["universe"], relations=relations, functions=functions)
    except (TypeError, ValueError) as exc:
        raise WorkspaceError(f"{where}: {exc}") from exc


def _enrichment_doc(e: Enrichment) -> dict:
    return {
        "carrier": sum(len(level) for level in e.levels),
        "levels": [sorted(level) for level in e.levels],
        "unary_fns": [
            {"name": f.name, "graph": [[a, v] for (a,), v in f.graph]}
            for f in e.functions
        ],
    }


def _enrichment_parse(doc, where: str) -> Enrichment:
    _expect_keys(doc, where, {"carrier", "levels", "unary_fns"}, set())
    elems = [x for level in doc["levels"] for x in level]
    if sorted(elems) != list(range(doc["carrier"])):
        raise WorkspaceError(f"{where}: levels do not partition 0..{doc['carrier'] - 1}")
    functions = {}
    for i, fn in enumerate(doc["unary_fns"]):
        here = f"{where}.unary_fns[{i}]"
        _expect_keys(fn, here, {"name", "graph"}, set())
        functions[fn["name"]] = {row[0]: row[1] for row in fn["graph"]}
    try:
        return Enrichment.make(doc["levels"], functions)
    except (TypeError, ValueError) as exc:
        raise WorkspaceError(f"{where}: {exc}") from exc


def _signature_doc(ta: TermAlgebra) -> dict:
    return {
        "symbols": [{"name": n, "arity": k} for n, k in ta.signature],
        "base": ta.base_size,
        "depth": max((t.depth for t in ta.terms), default=0),
    }


def _signature_parse(doc, where: str) -> TermAlgebra:
    _expect_keys(doc, where, {"symbols", "base", "depth"}, set())
    arities = {}
    for i, sym in enumerate(doc["symbols"]):
        _expect_keys(sym, f"{where}.symbols[{i}]", {"name", "arity"}, set())
        arities[sym["name"]] = sym["arity"]
    try:
        return TermAlgebra.build(AlgebraSignature.make(arities), doc["base"], doc["depth"])
    except (TypeError, ValueError) as exc:
        raise WorkspaceError(f"{where}: {exc}") from exc


def _theory_doc(spec: TheorySpec) -> dict:
    return {"tag": spec.tag, "params": {k: _plain(v) for k, v in spec.params}}


def _theory_parse(doc, where: str) -> TheorySpec:
    _expect_keys(doc, where, {"tag", "params"}, set())
    try:
        return TheorySpec.make(doc["tag"], **{k: _frozen(v) for k, v in doc["params"].items()})
    except (TypeError, ValueError) as exc:
        raise WorkspaceError(f"{where}: {exc}") from exc


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _frozen(v):
    if isinstance(v, list):
        return tuple(_frozen(x) for x in v)
    return v


def _expect_keys(doc, where: str, required: set, optional: set):
    if not isinstance(doc, dict):
        raise WorkspaceError(f"{where}: expected an object, got {type(doc).__name__}")
    missing = required - doc.keys()
    if missing:
        raise WorkspaceError(f"{where}: missing field {sorted(missing)[0]!r}")
    stray = doc.keys() - required - optional
    if stray:
        raise WorkspaceError(f"{where}: unknown field {sorted(stray)[0]!r}")


def render_workspace(ws: Workspace) -> str:
    doc = {
        "version": ws.version,
        "structures": {
            name: _structure_doc(s) for name, s in sorted(ws.structures.items())
        },
        "enrichments": {
            name: _enrichment_doc(e) for name, e in sorted(ws.enrichments.items())
        },
        "signatures": {
            name: _signature_doc(ta) for name, ta in sorted(ws.signatures.items())
        },
        "representations": {
            name: {
                "source": e.source,
                "target": e.target,
                "map": list(e.map),
                **({"carrier": e.carrier} if e.carrier is not None else {}),
                **({"enrichment": e.enrichment} if e.enrichment is not None else {}),
            }
            for name, e in sorted(ws.representations.items())
        },
        "theories": {name: _theory_doc(t) for name, t in sorted(ws.theories.items())},
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_workspace(text: str) -> Workspace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkspaceError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _expect_keys(
        doc,
        "document",
        {"version"},
        {"structures", "enrichments", "signatures", "representations", "theories"},
    )
    if doc["version"] != SCHEMA_VERSION:
        raise WorkspaceError(
            f"version: expected {SCHEMA_VERSION}, got {doc['version']!r}"
        )
    ws = Workspace(version=doc["version"])
    for name, sub in doc.get("structures", {}).items():
        ws.structures[name] = _structure_parse(sub, f"structures.{name}")
    for name, sub in doc.get("enrichments", {}).items():
        ws.enrichments[name] = _enrichment_parse(sub, f"enrichments.{name}")
    for name, sub in doc.get("signatures", {}).items():
        ws.signatures[name] = _signature_parse(sub, f"signatures.{name}")
    for name, sub in doc.get("representations", {}).items():
        where = f"representations.{name}"
        _expect_keys(sub, where, {"source", "target", "map"}, {"carrier", "enrichment"})
        entry = RepresentationEntry(
            source=sub["source"],
            target=sub["target"],
            map=tuple(sub["map"]),
            carrier=sub.get("carrier"),
            enrichment=sub.get("enrichment"),
        )
        for section, ref in (("structures", entry.source), ("structures", entry.target)):
            if ref not in doc.get(section, {}):
                raise WorkspaceError(f"{where}: unresolved reference {ref!r}")
        if entry.carrier is not None and entry.carrier not in doc.get("signatures", {}):
            raise WorkspaceError(f"{where}: unresolved signature {entry.carrier!r}")
        if entry.enrichment is not None and entry.enrichment not in doc.get("enrichments", {}):
            raise WorkspaceError(f"{where}: unresolved enrichment {entry.enrichment!r}")
        src = ws.structures[entry.source]
        tgt = ws.structures[entry.target]
        if len(entry.map) != src.size:
            raise WorkspaceError(
                f"{where}: map has {len(entry.map)} entries for a universe of {src.size}"
            )
        bad = [x for x in entry.map if not (isinstance(x, int) and 0 <= x < tgt.size)]
        if bad:
            raise WorkspaceError(f"{where}: image {bad[0]!r} outside the target universe")
        ws.representations[name] = entry
    for name, sub in doc.get("theories", {}).items():
        ws.theories[name] = _theory_parse(sub, f"theories.{name}")
    return ws


def load_workspace(path) -> Workspace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_workspace(fh.read())


def save_workspace(ws: Workspace, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_workspace(ws))
