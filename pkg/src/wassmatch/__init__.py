"""Unsupervised ontology matching with optimal transport over label embeddings."""

__version__ = "0.1.0"

from .embeddings import (
    ElementEmbedding,
    EmbeddingStore,
    LabelEmbedder,
    LabelTokens,
    embed_element,
    load_embeddings,
    normalize_label,
)
from .evaluation import (
    EvalReport,
    ReferenceAlignment,
    evaluate,
    jaccard_similarity,
    ontology_similarity,
    pearson,
    threshold_sweep,
)
from .matching import Candidate, CandidateSet, global_couple, mnn_extract, topk_extract
from .ontology import ContextTriple, Ontology, OntologyElement, extract_context, load_ontology
from .refinement import (
    Alignment,
    ScoredCandidate,
    filter_alignment,
    levenshtein_norm,
    local_wd,
    pair_wd,
    score_candidates,
)
from .transport import (
    Coupling,
    euclidean_cost,
    exact_ot,
    inverse_min_distance_marginal,
    sinkhorn,
    uniform_marginal,
    wasserstein_distance,
)
