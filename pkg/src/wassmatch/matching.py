"""Global coupling between two ontologies and candidate extraction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .embeddings import as_embedder
from .ontology import MATCHABLE_KINDS, Ontology
from .transport import (
    Coupling,
    euclidean_cost,
    inverse_min_distance_marginal,
    sinkhorn,
    uniform_marginal,
)

logger = logging.getLogger(__name__)

WEIGHTINGS = ("uniform", "inverse_min_distance")
DEFAULT_TOPK = 20


@dataclass
class Candidate:
    source_iri: str
    target_iri: str
    coupling_mass: float
    label_euclidean: float | None = None
    scores: dict = field(default_factory=dict)


@dataclass
class CandidateSet:
    method: str
    candidates: list[Candidate]
    source_onto: str = ""
    target_onto: str = ""
    k: int | None = None

    def pairs(self) -> set[tuple[str, str]]:
        return {(c.source_iri, c.target_iri) for c in self.candidates}

    def __len__(self):
        return len(self.candidates)


@dataclass
class PartitionCoupling:
    kind: str
    source_iris: list[str]
    target_iris: list[str]
    cost: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    coupling: Coupling


@dataclass
class GlobalCoupling:
    source_onto: str
    target_onto: str
    partitions: dict[str, PartitionCoupling]
    warnings: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(p.coupling.converged for p in self.partitions.values())


def marginals(C, weighting: str):
    if weighting == "uniform":
        return uniform_marginal(C.shape[0]), uniform_marginal(C.shape[1])
    if weighting == "inverse_min_distance":
        return inverse_min_distance_marginal(C, "source"), inverse_min_distance_marginal(C, "target")
    raise ValueError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")


def global_couple(
    source: Ontology,
    target: Ontology,
    store,
    weighting: str = "uniform",
    kinds=MATCHABLE_KINDS,
    solver=sinkhorn,
    **solver_kwargs,
) -> GlobalCoupling:
    """Solve one transport problem per element kind.

    Classes are coupled with classes, object properties with object
    properties and datatype properties with datatype properties, over
    Euclidean distances between mean label embeddings. A kind missing on
    either side is skipped and noted in ``warnings``.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")
    embedder = as_embedder(store)
    result = GlobalCoupling(source.id, target.id, {})
    for kind in kinds:
        src = source.elements_of_kind(kind)
        tgt = target.elements_of_kind(kind)
        if not src or not tgt:
            if src or tgt:
                msg = f"skipping {kind}: {len(src)} source vs {len(tgt)} target elements"
                logger.warning(msg)
                result.warnings.append(msg)
            continue
        s_emb = [embedder.embed_element(el) for el in src]
        t_emb = [embedder.embed_element(el) for el in tgt]
        C = euclidean_cost(
            [e.mean_vector for e in s_emb],
            [e.mean_vector for e in t_emb],
            x_degenerate=[e.degenerate for e in s_emb],
            y_degenerate=[e.degenerate for e in t_emb],
        )
        mu, nu = marginals(C, weighting)
        coupling = solver(C, mu, nu, **solver_kwargs)
        result.partitions[kind] = PartitionCoupling(
            kind, [el.iri for el in src], [el.iri for el in tgt], C, mu, nu, coupling
        )
    if not result.partitions:
        raise ValueError(f"no element kind is present in both {source.id!r} and {target.id!r}")
    return result


def _plan(T) -> np.ndarray:
    return T.plan if isinstance(T, Coupling) else np.asarray(T, dtype=float)


def mnn_pairs(T) -> list[tuple[int, int]]:
    """Cells that are both the maximum of their row and of their column.

    Among equal entries the lowest index wins, so each row and column
    contributes at most one pair.
    """
    plan = _plan(T)
    row_best = np.argmax(plan, axis=1)
    col_best = np.argmax(plan, axis=0)
    return [(i, int(j)) for i, j in enumerate(row_best) if col_best[j] == i]


def topk_pairs(T, k: int) -> list[tuple[int, int]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    plan = _plan(T)
    order = np.argsort(-plan, axis=1, kind="stable")[:, :k]
    return [(i, int(j)) for i, row in enumerate(order) for j in row]


def _to_candidates(T, pairs, source_iris, target_iris, cost) -> list[Candidate]:
    plan = _plan(T)
    n, m = plan.shape
    source_iris = source_iris if source_iris is not None else [str(i) for i in range(n)]
    target_iris = target_iris if target_iris is not None else [str(j) for j in range(m)]
    return [
        Candidate(
            source_iri=source_iris[i],
            target_iri=target_iris[j],
            coupling_mass=float(plan[i, j]),
            label_euclidean=float(cost[i, j]) if cost is not None else None,
        )
        for i, j in pairs
    ]


def mnn_extract(T, source_iris=None, target_iris=None, cost=None) -> CandidateSet:
    cands = _to_candidates(T, mnn_pairs(T), source_iris, target_iris, cost)
    return CandidateSet("mnn", cands)


def topk_extract(T, k: int = DEFAULT_TOPK, source_iris=None, target_iris=None, cost=None) -> CandidateSet:
    cands = _to_candidates(T, topk_pairs(T, k), source_iris, target_iris, cost)
    return CandidateSet("topk", cands, k=k)


def extract_candidates(gc: GlobalCoupling, method: str = "topk", k: int = DEFAULT_TOPK) -> CandidateSet:
    """Run an extractor over every partition and merge the results."""
    cands: list[Candidate] = []
    for part in gc.partitions.values():
        if method == "mnn":
            cs = mnn_extract(part.coupling, part.source_iris, part.target_iris, part.cost)
        elif method == "topk":
            cs = topk_extract(part.coupling, k, part.source_iris, part.target_iris, part.cost)
        else:
            raise ValueError(f"unknown extraction method {method!r}")
        cands.extend(cs.candidates)
    return CandidateSet(method, cands, gc.source_onto, gc.target_onto, k if method == "topk" else None)
