import json

import numpy as np
import pytest

from wassmatch.embeddings import EmbeddingStore
from wassmatch.ontology import ontology_from_document


def random_store(words, dim=32, seed=0):
    """Gaussian unit vectors: nearly orthogonal for moderate ``dim``."""
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(len(words), dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return EmbeddingStore(list(words), vecs)


def write_vec(path, store):
    lines = [f"{len(store)} {store.dimension}"]
    for tok in store.tokens():
        lines.append(tok + " " + " ".join(repr(float(v)) for v in store.get(tok)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def classes_doc(onto_id, labels, triples=(), prefix=None):
    prefix = prefix or f"http://example.org/{onto_id}#"
    return {
        "id": onto_id,
        "elements": [{"iri": prefix + lab, "kind": "class", "label": lab} for lab in labels],
        "triples": [[prefix + s, p if p == "subClassOf" else prefix + p, prefix + o] for s, p, o in triples],
    }


def write_doc(path, doc):
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


# small 3-concept source and 4-concept target
EXAMPLE_SOURCE_LABELS = ["Document", "Writer", "Topic"]
EXAMPLE_TARGET_LABELS = ["Paper", "Accepted_Paper", "Author", "Subject_Area"]


def conference_docs():
    """Local contexts of Presentation and Paper_Presentation."""
    src = {
        "id": "conf_a",
        "elements": [
            {"iri": "a:Presentation", "kind": "class", "label": "Presentation"},
            {"iri": "a:Conference_Event", "kind": "class", "label": "Conference_Event"},
            {"iri": "a:Conference_Contributor", "kind": "class", "label": "Conference_Contributor"},
            {"iri": "a:Accepted_Paper", "kind": "class", "label": "Accepted_Paper"},
            {"iri": "a:hasSpeaker", "kind": "object_property", "label": "hasSpeaker"},
            {"iri": "a:isAbout", "kind": "object_property", "label": "isAbout"},
        ],
        "triples": [
            ["a:Presentation", "subClassOf", "a:Conference_Event"],
            ["a:Presentation", "a:hasSpeaker", "a:Conference_Contributor"],
            ["a:Presentation", "a:isAbout", "a:Accepted_Paper"],
        ],
    }
    tgt = {
        "id": "conf_b",
        "elements": [
            {"iri": "b:Paper_Presentation", "kind": "class", "label": "Paper_Presentation"},
            {"iri": "b:Program_Event", "kind": "class", "label": "Program_Event"},
            {"iri": "b:Registered_Author", "kind": "class", "label": "Registered_Author"},
            {"iri": "b:Paper", "kind": "class", "label": "Paper"},
            {"iri": "b:hasPresenter", "kind": "object_property", "label": "hasPresenter"},
            {"iri": "b:hasPaper", "kind": "object_property", "label": "hasPaper"},
        ],
        "triples": [
            ["b:Paper_Presentation", "subClassOf", "b:Program_Event"],
            ["b:Paper_Presentation", "b:hasPresenter", "b:Registered_Author"],
            ["b:Paper_Presentation", "b:hasPaper", "b:Paper"],
        ],
    }
    return src, tgt


CONFERENCE_WORDS = [
    "presentation", "conference", "event", "contributor", "accepted", "paper", "has",
    "speaker", "is", "about", "program", "registered", "author", "presenter", "sub", "class", "of",
]


@pytest.fixture
def conference_pair():
    src, tgt = conference_docs()
    return ontology_from_document(src), ontology_from_document(tgt)


@pytest.fixture
def conference_store():
    return random_store(CONFERENCE_WORDS, dim=16, seed=7)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
