"""Alignment scoring against references, threshold sweeps and ontology similarity."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import as_embedder
from .ontology import Ontology
from .refinement import DEFAULT_METRIC, Alignment, filter_alignment
from .transport import EXACT_SIZE_LIMIT, euclidean_cost, exact_ot, sinkhorn, uniform_marginal

SCOPES = ("classes_only", "all")
SWEEP_THRESHOLDS = tuple(round(i / 100, 2) for i in range(101))


@dataclass(frozen=True)
class ReferenceAlignment:
    pairs: frozenset
    scope: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(tuple(p) for p in self.pairs))
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}")

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    threshold: float
    true_positive: int
    predicted: int
    reference: int

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.true_positive, self.predicted, self.reference)


def load_reference(path, scope: str = "all") -> ReferenceAlignment:
    """Tab-separated ``source_iri<TAB>target_iri`` lines; ``#`` starts a comment."""
    pairs = set()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2 or not fields[0] or not fields[1]:
                raise ValueError(f"{path}:{lineno}: expected '<source_iri>\\t<target_iri>'")
            pairs.add((fields[0], fields[1]))
    return ReferenceAlignment(frozenset(pairs), scope)


_ALIGN_NS = "{http://knowledgeweb.semanticweb.org/heterogeneity/alignment}"
_RDF_NS = "{http://www.w3.org/1999/02/22-rdf-syntax-ns#}"


def load_oaei_reference(path, scope: str = "all") -> ReferenceAlignment:
    """Equivalence cells (relation ``=``) from an OAEI alignment-format RDF/XML file."""
    tree = ET.parse(path)
    pairs = set()
    for cell in tree.iter(f"{_ALIGN_NS}Cell"):
        rel = cell.findtext(f"{_ALIGN_NS}relation", default="=").strip()
        if rel != "=":
            continue
        e1 = cell.find(f"{_ALIGN_NS}entity1")
        e2 = cell.find(f"{_ALIGN_NS}entity2")
        if e1 is None or e2 is None:
            continue
        s = e1.get(f"{_RDF_NS}resource")
        t = e2.get(f"{_RDF_NS}resource")
        if s and t:
            pairs.add((s, t))
    return ReferenceAlignment(frozenset(pairs), scope)


def restrict_pairs(pairs, source: Ontology, target: Ontology, scope: str):
    """Drop pairs that are not class-to-class when ``scope`` is classes_only."""
    if scope == "all":
        return set(pairs)
    if scope != "classes_only":
        raise ValueError(f"unknown scope {scope!r}")

    def is_class(onto, iri):
        el = onto.elements.get(iri)
        return el is not None and el.kind == "class"

    return {(s, t) for s, t in pairs if is_class(source, s) and is_class(target, t)}


def report(predicted, reference, threshold: float = 0.0) -> EvalReport:
    predicted = set(predicted)
    reference = set(reference)
    tp = len(predicted & reference)
    p = tp / len(predicted) if predicted else (1.0 if tp == 0 else 0.0)
    r = tp / len(reference) if reference else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return EvalReport(p, r, f1, threshold, tp, len(predicted), len(reference))


def evaluate(alignment: Alignment, reference: ReferenceAlignment) -> EvalReport:
    return report(alignment.pairs(), reference.pairs, alignment.threshold)


def threshold_sweep(scored, reference: ReferenceAlignment, metric_name: str = DEFAULT_METRIC) -> tuple[EvalReport, list[EvalReport]]:
    """Evaluate the filtered alignment at thresholds 0.00, 0.01, ..., 1.00.

    Returns the report with the highest F1 (lowest threshold on ties) and
    the full 101-point curve.
    """
    curve = []
    for t in SWEEP_THRESHOLDS:
        curve.append(evaluate(filter_alignment(scored, t, metric_name), reference))
    best = curve[0]
    for rep in curve[1:]:
        if rep.f1 > best.f1:
            best = rep
    return best, curve


def jaccard_similarity(n_source: int, n_target: int, n_matchings: int) -> float:
    """|M| / (|O_S| + |O_T| - |M|)."""
    if min(n_source, n_target, n_matchings) < 0:
        raise ValueError("counts must be nonnegative")
    if n_matchings > min(n_source, n_target):
        raise ValueError(f"{n_matchings} matchings exceed min({n_source}, {n_target})")
    denom = n_source + n_target - n_matchings
    if denom == 0:
        raise ValueError("jaccard similarity undefined for two empty ontologies")
    return n_matchings / denom


def ontology_similarity(source: Ontology, target: Ontology, store, **solver_kwargs) -> tuple[float, float]:
    """Wasserstein distance between the class-embedding sets and ``ws = exp(-wd)``.

    Uniform weights on both sides; solved exactly when the problem fits the
    exact solver's size guard, by Sinkhorn otherwise.
    """
    embedder = as_embedder(store)
    src = source.elements_of_kind("class")
    tgt = target.elements_of_kind("class")
    if not src or not tgt:
        raise ValueError("ontology similarity needs at least one class on each side")
    es = [embedder.embed_element(el) for el in src]
    et = [embedder.embed_element(el) for el in tgt]
    C = euclidean_cost(
        [e.mean_vector for e in es], [e.mean_vector for e in et],
        [e.degenerate for e in es], [e.degenerate for e in et],
    )
    mu, nu = uniform_marginal(len(src)), uniform_marginal(len(tgt))
    if C.size <= EXACT_SIZE_LIMIT:
        wd = exact_ot(C, mu, nu).wd
    else:
        wd = sinkhorn(C, mu, nu, **solver_kwargs).wd
    return wd, math.exp(-wd)


def pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("pearson undefined: zero variance")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))
