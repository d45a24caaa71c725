"""Ontology elements, triples, document I/O and one-hop context extraction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SUBCLASS_OF = "subClassOf"
MATCHABLE_KINDS = ("class", "object_property", "datatype_property")
# pseudo-elements standing in for literal types such as xsd:string
DATATYPE_KIND = "datatype"
KINDS = MATCHABLE_KINDS + (DATATYPE_KIND,)
_AUTO_DATATYPE_PREFIXES = ("xsd:", "http://www.w3.org/2001/XMLSchema#")


class OntologyLoadError(ValueError):
    pass


def local_name(iri: str) -> str:
    for sep in ("#", "/", ":"):
        if sep in iri:
            iri = iri.rsplit(sep, 1)[1] or iri
    return iri


@dataclass(frozen=True)
class OntologyElement:
    iri: str
    kind: str
    label: str
    synonyms: tuple[str, ...] = ()


@dataclass(frozen=True)
class ContextTriple:
    subject: OntologyElement
    predicate: OntologyElement | str
    object: OntologyElement
    direction: str

    @property
    def predicate_label(self) -> str:
        return self.predicate if isinstance(self.predicate, str) else self.predicate.label

    def labels(self) -> tuple[str, str, str]:
        return (self.subject.label, self.predicate_label, self.object.label)


@dataclass
class Ontology:
    id: str
    elements: dict[str, OntologyElement]
    triples: tuple[tuple[str, str, str], ...] = ()
    _by_node: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.triples = tuple(dict.fromkeys(tuple(t) for t in self.triples))
        self._validate()
        index: dict[str, list[int]] = {}
        for i, (s, _, o) in enumerate(self.triples):
            index.setdefault(s, []).append(i)
            if o != s:
                index.setdefault(o, []).append(i)
        self._by_node = index

    def _validate(self):
        for iri, el in self.elements.items():
            if iri != el.iri:
                raise OntologyLoadError(f"element key {iri!r} does not match its iri {el.iri!r}")
            if el.kind not in KINDS:
                raise OntologyLoadError(f"element {iri!r}: unknown kind {el.kind!r}")
            if not el.label:
                raise OntologyLoadError(f"element {iri!r}: empty label")
        for i, (s, p, o) in enumerate(self.triples):
            where = f"triple {i} {[s, p, o]}"
            if s not in self.elements:
                raise OntologyLoadError(f"{where}: undeclared subject {s!r}")
            if o not in self.elements:
                raise OntologyLoadError(f"{where}: undeclared object {o!r}")
            if p != SUBCLASS_OF:
                pred = self.elements.get(p)
                if pred is None or pred.kind not in ("object_property", "datatype_property"):
                    raise OntologyLoadError(f"{where}: predicate {p!r} is neither subClassOf nor a declared property")

    @property
    def class_count(self) -> int:
        return sum(1 for el in self.elements.values() if el.kind == "class")

    def elements_of_kind(self, kind: str) -> list[OntologyElement]:
        return [el for el in self.elements.values() if el.kind == kind]

    def element(self, iri: str) -> OntologyElement:
        try:
            return self.elements[iri]
        except KeyError:
            raise KeyError(f"ontology {self.id!r} has no element {iri!r}") from None

    def to_document(self) -> dict:
        elements = []
        for el in self.elements.values():
            entry = {"iri": el.iri, "kind": el.kind, "label": el.label}
            if el.synonyms:
                entry["synonyms"] = list(el.synonyms)
            elements.append(entry)
        return {"id": self.id, "elements": elements, "triples": [list(t) for t in self.triples]}


def ontology_from_document(doc: dict, source: str = "<document>") -> Ontology:
    if not isinstance(doc, dict):
        raise OntologyLoadError(f"{source}: top level must be an object")
    for key in ("id", "elements"):
        if key not in doc:
            raise OntologyLoadError(f"{source}: missing field {key!r}")
    if not isinstance(doc["elements"], list):
        raise OntologyLoadError(f"{source}: 'elements' must be a list")

    elements: dict[str, OntologyElement] = {}
    for i, entry in enumerate(doc["elements"]):
        where = f"{source}: elements[{i}]"
        if not isinstance(entry, dict) or "iri" not in entry or "kind" not in entry:
            raise OntologyLoadError(f"{where}: needs 'iri' and 'kind'")
        iri = entry["iri"]
        if not isinstance(iri, str) or not iri:
            raise OntologyLoadError(f"{where}: iri must be a nonempty string")
        if iri in elements:
            raise OntologyLoadError(f"{where}: duplicate iri {iri!r}")
        kind = entry["kind"]
        if kind not in KINDS:
            raise OntologyLoadError(f"{where}: unknown kind {kind!r}")
        label = entry.get("label") or local_name(iri)
        synonyms = entry.get("synonyms", [])
        if not isinstance(label, str) or not isinstance(synonyms, list):
            raise OntologyLoadError(f"{where}: label must be a string and synonyms a list")
        elements[iri] = OntologyElement(iri, kind, label, tuple(synonyms))

    triples = []
    for i, t in enumerate(doc.get("triples", [])):
        where = f"{source}: triples[{i}]"
        if not isinstance(t, list) or len(t) != 3 or not all(isinstance(x, str) for x in t):
            raise OntologyLoadError(f"{where}: expected [subject, predicate, object] strings")
        s, p, o = t
        if o not in elements and o.startswith(_AUTO_DATATYPE_PREFIXES):
            elements[o] = OntologyElement(o, DATATYPE_KIND, local_name(o))
        triples.append((s, p, o))

    try:
        return Ontology(id=str(doc["id"]), elements=elements, triples=tuple(triples))
    except OntologyLoadError as exc:
        raise OntologyLoadError(f"{source}: {exc}") from None


def load_ontology(path) -> Ontology:
    """Load a canonical JSON ontology document."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise OntologyLoadError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return ontology_from_document(doc, source=str(path))


def dump_ontology(onto: Ontology, path) -> None:
    Path(path).write_text(json.dumps(onto.to_document(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def extract_context(onto: Ontology, element_iri: str) -> list[ContextTriple]:
    """All one-hop triples in which the element is subject or object.

    Covers parents and children through subClassOf as well as property
    triples in both directions; ``direction`` records which side the focal
    element is on.
    """
    onto.element(element_iri)
    out = []
    for i in onto._by_node.get(element_iri, ()):
        s, p, o = onto.triples[i]
        pred = p if p == SUBCLASS_OF else onto.elements[p]
        out.append(ContextTriple(
            subject=onto.elements[s],
            predicate=pred,
            object=onto.elements[o],
            direction="outgoing" if s == element_iri else "incoming",
        ))
    return out
