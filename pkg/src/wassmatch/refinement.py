"""Candidate refinement with local Wasserstein distances over element contexts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import LabelEmbedder, as_embedder
from .matching import Candidate, CandidateSet
from .ontology import ContextTriple, Ontology, OntologyElement, extract_context
from .transport import euclidean_cost, exact_ot, sinkhorn, uniform_marginal

EXACT_CONTEXT_LIMIT = 12

COMPONENTS = ("string_sim", "euclid_sim", "label_wd_sim", "local_wd_sim")

# named interaction metrics; each is a product of similarity components
METRICS = {
    "string-distance": ("string_sim",),
    "string-context-distance": ("string_sim", "local_wd_sim"),
    "euclidean-distance": ("euclid_sim",),
    "euclidean-context-distance": ("euclid_sim", "local_wd_sim"),
    "label-wd-distance": ("label_wd_sim",),
    "label-wd-context-distance": ("label_wd_sim", "local_wd_sim"),
    "all-distance": ("string_sim", "euclid_sim", "label_wd_sim", "local_wd_sim"),
}
DEFAULT_METRIC = "string-context-distance"


def parse_metric(metric: str) -> tuple[str, ...]:
    """Resolve a metric name, or a ``*``-joined list of component names."""
    if metric in METRICS:
        return METRICS[metric]
    parts = tuple(p.strip() for p in metric.split("*"))
    if parts and all(p in COMPONENTS for p in parts):
        return parts
    raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)} or a '*' product of {COMPONENTS}")


def similarity(distance: float) -> float:
    return math.exp(-distance)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_norm(a: str, b: str) -> float:
    """Edit distance scaled by the longer length; 0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def _triple_points(triple: ContextTriple, embedder: LabelEmbedder):
    embs = [embedder.embed_element(triple.subject), embedder.embed(triple.predicate_label),
            embedder.embed_element(triple.object)]
    return [e.mean_vector for e in embs], [e.degenerate for e in embs]


def pair_wd(a: ContextTriple, b: ContextTriple, store, exact: bool = True, **solver_kwargs) -> float:
    """Wasserstein distance between the 3-point embedding sets of two triples.

    Subject, predicate and object each contribute one uniformly weighted
    point (the mean label embedding); ground costs are Euclidean.
    """
    embedder = as_embedder(store)
    xa, da = _triple_points(a, embedder)
    xb, db = _triple_points(b, embedder)
    C = euclidean_cost(xa, xb, x_degenerate=da, y_degenerate=db)
    w = uniform_marginal(3)
    if exact:
        return exact_ot(C, w, w).wd
    return sinkhorn(C, w, w, **solver_kwargs).wd


def context_cost(ctx_s, ctx_t, store, cache: dict | None = None) -> np.ndarray:
    embedder = as_embedder(store)
    C = np.empty((len(ctx_s), len(ctx_t)))
    for i, s in enumerate(ctx_s):
        for j, t in enumerate(ctx_t):
            key = (s.labels(), t.labels())
            if cache is not None and key in cache:
                C[i, j] = cache[key]
                continue
            C[i, j] = pair_wd(s, t, embedder)
            if cache is not None:
                cache[key] = C[i, j]
    return C


def local_wd(
    ctx_s,
    ctx_t,
    store,
    source_element: OntologyElement | None = None,
    target_element: OntologyElement | None = None,
    exact_limit: int = EXACT_CONTEXT_LIMIT,
    pair_cache: dict | None = None,
    **solver_kwargs,
) -> float:
    """Wasserstein distance between two contexts with pairWD ground costs.

    Both triple sets carry uniform weights. If either context is empty the
    Euclidean distance between the focal elements' mean label embeddings is
    returned instead, which requires ``source_element``/``target_element``.
    """
    embedder = as_embedder(store)
    if not ctx_s or not ctx_t:
        if source_element is None or target_element is None:
            raise ValueError("empty context fallback needs the focal source and target elements")
        es = embedder.embed_element(source_element)
        et = embedder.embed_element(target_element)
        return float(euclidean_cost(
            [es.mean_vector], [et.mean_vector], [es.degenerate], [et.degenerate]
        )[0, 0])
    C = context_cost(ctx_s, ctx_t, embedder, pair_cache)
    mu = uniform_marginal(len(ctx_s))
    nu = uniform_marginal(len(ctx_t))
    if len(ctx_s) <= exact_limit and len(ctx_t) <= exact_limit:
        return exact_ot(C, mu, nu).wd
    return sinkhorn(C, mu, nu, **solver_kwargs).wd


def label_wd(source_element, target_element, store) -> float | None:
    """WD between the token-embedding sets of two labels; None if either set is empty."""
    embedder = as_embedder(store)
    es = embedder.embed_element(source_element)
    et = embedder.embed_element(target_element)
    if es.degenerate or et.degenerate:
        return None
    X, Y = es.token_matrix(), et.token_matrix()
    C = euclidean_cost(X, Y)
    return exact_ot(C, uniform_marginal(len(X)), uniform_marginal(len(Y))).wd


@dataclass
class ScoredCandidate:
    candidate: Candidate
    string_sim: float
    euclid_sim: float
    label_wd_sim: float
    local_wd_sim: float
    interaction: tuple[str, ...]
    final_score: float
    distances: dict = field(default_factory=dict)

    @property
    def source_iri(self) -> str:
        return self.candidate.source_iri

    @property
    def target_iri(self) -> str:
        return self.candidate.target_iri

    def component(self, name: str) -> float:
        return getattr(self, name)


@dataclass
class Alignment:
    correspondences: list[tuple[str, str, float]]
    threshold: float
    metric_name: str = DEFAULT_METRIC

    def pairs(self) -> set[tuple[str, str]]:
        return {(s, t) for s, t, _ in self.correspondences}

    def __len__(self):
        return len(self.correspondences)


class Scorer:
    """Scores candidates between one source/target pair, caching contexts and pairWDs."""

    def __init__(self, source: Ontology, target: Ontology, store, metric: str = DEFAULT_METRIC,
                 **solver_kwargs):
        self.source = source
        self.target = target
        self.embedder = as_embedder(store)
        self.metric = metric
        self.interaction = parse_metric(metric)
        self.solver_kwargs = solver_kwargs
        self._contexts: dict = {}
        self._pair_cache: dict = {}

    def _context(self, onto: Ontology, iri: str):
        key = (id(onto), iri)
        if key not in self._contexts:
            self._contexts[key] = extract_context(onto, iri)
        return self._contexts[key]

    def _text(self, element: OntologyElement) -> str:
        return " ".join(self.embedder.tokens(element.label).tokens)

    def score(self, cand: Candidate) -> ScoredCandidate:
        s_el = self.source.element(cand.source_iri)
        t_el = self.target.element(cand.target_iri)
        es = self.embedder.embed_element(s_el)
        et = self.embedder.embed_element(t_el)

        string_d = levenshtein_norm(self._text(s_el), self._text(t_el))
        euclid_d = cand.label_euclidean
        if euclid_d is None:
            euclid_d = float(euclidean_cost(
                [es.mean_vector], [et.mean_vector], [es.degenerate], [et.degenerate]
            )[0, 0])
        label_d = label_wd(s_el, t_el, self.embedder)
        if label_d is None:
            label_d = euclid_d
        local_d = local_wd(
            self._context(self.source, s_el.iri), self._context(self.target, t_el.iri),
            self.embedder, s_el, t_el, pair_cache=self._pair_cache, **self.solver_kwargs,
        )
        sims = {
            "string_sim": similarity(string_d),
            "euclid_sim": similarity(euclid_d),
            "label_wd_sim": similarity(label_d),
            "local_wd_sim": similarity(local_d),
        }
        final = math.prod(sims[name] for name in self.interaction)
        cand.scores.update(sims)
        cand.scores["final_score"] = final
        return ScoredCandidate(
            candidate=cand,
            interaction=self.interaction,
            final_score=final,
            distances={"string": string_d, "euclidean": euclid_d, "label_wd": label_d, "local_wd": local_d},
            **sims,
        )


def score_candidates(cands: CandidateSet, source: Ontology, target: Ontology, store,
                     metric: str = DEFAULT_METRIC, **solver_kwargs) -> list[ScoredCandidate]:
    scorer = Scorer(source, target, store, metric, **solver_kwargs)
    candidates = cands.candidates if isinstance(cands, CandidateSet) else list(cands)
    return [scorer.score(c) for c in candidates]


def filter_alignment(scored, threshold: float, metric_name: str = DEFAULT_METRIC) -> Alignment:
    """Keep candidates scoring at least ``threshold``, then reduce to one-to-one.

    The reduction is greedy by descending score (ties broken by source then
    target iri) and claims each source and target iri at most once.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold!r}")
    kept = [sc for sc in scored if sc.final_score >= threshold]
    kept.sort(key=lambda sc: (-sc.final_score, sc.source_iri, sc.target_iri))
    used_s: set[str] = set()
    used_t: set[str] = set()
    out = []
    for sc in kept:
        if sc.source_iri in used_s or sc.target_iri in used_t:
            continue
        used_s.add(sc.source_iri)
        used_t.add(sc.target_iri)
        out.append((sc.source_iri, sc.target_iri, sc.final_score))
    return Alignment(out, threshold, metric_name)
