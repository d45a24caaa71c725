"""Word-vector loading and label embedding."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class EmbeddingStore:
    """Immutable token -> vector map backed by one read-only matrix."""

    def __init__(self, tokens, vectors):
        vectors = np.array(vectors, dtype=float, copy=True)
        if vectors.ndim != 2 or vectors.shape[1] < 1:
            raise ValueError("vectors must form a 2-D array with positive dimension")
        if len(tokens) != len(vectors):
            raise ValueError("token and vector counts differ")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        vectors.setflags(write=False)
        self._vectors = vectors
        self._index = {}
        for i, tok in enumerate(tokens):
            self._index.setdefault(tok, i)

    @classmethod
    def from_dict(cls, entries: dict) -> "EmbeddingStore":
        tokens = list(entries)
        return cls(tokens, [entries[t] for t in tokens])

    @property
    def dimension(self) -> int:
        return self._vectors.shape[1]

    @property
    def vocabulary_size(self) -> int:
        return len(self._index)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, token) -> bool:
        return token in self._index

    def get(self, token: str):
        """Vector for ``token``, or None when it is out of vocabulary."""
        i = self._index.get(token)
        return None if i is None else self._vectors[i]

    def tokens(self) -> list[str]:
        return list(self._index)


def load_embeddings(path) -> EmbeddingStore:
    """Read a word2vec/fasttext ``.vec`` style text file.

    An optional ``<count> <dimension>`` header line is recognised; without it
    the dimension comes from the first row. Every row must carry exactly that
    many finite components.
    """
    path = Path(path)
    tokens: list[str] = []
    rows: list[list[float]] = []
    dim = None
    declared = None
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n").rstrip(" ")
            if not line.strip():
                continue
            parts = line.split(" ")
            if dim is None and len(parts) == 2 and parts[0].isdigit():
                # a leading integer count marks a header line
                try:
                    declared, dim = int(parts[0]), int(parts[1])
                except ValueError:
                    raise EmbeddingParseError(f"malformed header {line!r}", lineno) from None
                if dim < 1:
                    raise EmbeddingParseError(f"malformed header {line!r}", lineno)
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise EmbeddingParseError("row has no vector components", lineno)
            if len(values) != dim:
                raise EmbeddingParseError(
                    f"token {token!r} has {len(values)} components, expected {dim}", lineno
                )
            try:
                vec = [float(v) for v in values]
            except ValueError:
                raise EmbeddingParseError(f"non-numeric component for token {token!r}", lineno) from None
            if not all(math.isfinite(v) for v in vec):
                raise EmbeddingParseError(f"non-finite component for token {token!r}", lineno)
            tokens.append(token)
            rows.append(vec)
    if dim is None:
        raise EmbeddingParseError(f"{path}: empty embeddings file")
    if not rows:
        raise EmbeddingParseError(f"{path}: header present but no vectors")
    if declared is not None and declared != len(rows):
        logger.warning("%s: header declares %d vectors, read %d", path, declared, len(rows))
    store = EmbeddingStore(tokens, rows)
    if len(store) != len(rows):
        logger.warning("%s: %d duplicate tokens ignored (first kept)", path, len(rows) - len(store))
    return store


@dataclass(frozen=True)
class LabelTokens:
    original: str
    tokens: tuple[str, ...]


def _camel_split(chunk: str) -> list[str]:
    pieces = []
    start = 0
    for i in range(1, len(chunk)):
        prev, cur = chunk[i - 1], chunk[i]
        nxt = chunk[i + 1] if i + 1 < len(chunk) else ""
        # "hasSpeaker" -> has|Speaker, "XMLParser" -> XML|Parser
        if cur.isupper() and (prev.islower() or prev.isdigit() or (prev.isupper() and nxt.islower())):
            pieces.append(chunk[start:i])
            start = i
    pieces.append(chunk[start:])
    return pieces


def _clean_token(piece: str) -> str:
    return "".join(c for c in piece.lower() if c.isalnum() and not c.isupper())


def normalize_label(label: str) -> LabelTokens:
    """Split a label into lowercase word tokens.

    Splits on any non-alphanumeric character (underscore, hyphen, whitespace,
    punctuation) and on camelCase boundaries, then lowercases. Stopwords are
    kept.
    """
    tokens = []
    chunk = []
    for c in label + " ":
        if c.isalnum():
            chunk.append(c)
            continue
        if chunk:
            for piece in _camel_split("".join(chunk)):
                tok = _clean_token(piece)
                if tok:
                    tokens.append(tok)
            chunk = []
    return LabelTokens(original=label, tokens=tuple(tokens))


def load_synonyms(path) -> dict[str, tuple[str, ...]]:
    """Synonym file: ``token<TAB>replacement tokens`` per line, ``#`` comments."""
    synonyms = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, repl = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected '<token>\\t<replacement tokens>'")
            synonyms[key.strip().lower()] = tuple(normalize_label(repl).tokens)
    return synonyms


def apply_synonyms(tokens: LabelTokens, synonyms: dict | None) -> LabelTokens:
    if not synonyms:
        return tokens
    out = []
    for tok in tokens.tokens:
        out.extend(synonyms.get(tok, (tok,)))
    return LabelTokens(original=tokens.original, tokens=tuple(out))


@dataclass(frozen=True)
class ElementEmbedding:
    mean_vector: np.ndarray
    token_vectors: tuple = ()
    oov_tokens: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        return not self.token_vectors

    def token_matrix(self) -> np.ndarray:
        return np.array([v for _, v in self.token_vectors])


def embed_element(tokens: LabelTokens, store: EmbeddingStore) -> ElementEmbedding:
    """Average the in-vocabulary token vectors of a label.

    Out-of-vocabulary tokens are skipped and recorded; with none left the
    embedding is degenerate and its mean is the zero vector.
    """
    found = []
    oov = []
    for tok in tokens.tokens:
        vec = store.get(tok)
        if vec is None:
            oov.append(tok)
        else:
            found.append((tok, vec))
    if not found:
        return ElementEmbedding(np.zeros(store.dimension), (), tuple(oov))
    # sorted summation order makes the mean independent of token order
    ordered = sorted(found, key=lambda tv: tv[0])
    mean = np.sum([v for _, v in ordered], axis=0) / len(ordered)
    return ElementEmbedding(mean, tuple(found), tuple(oov))


@dataclass
class LabelEmbedder:
    """Caches label embeddings for one store and optional synonym map."""

    store: EmbeddingStore
    synonyms: dict | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def tokens(self, label: str) -> LabelTokens:
        return apply_synonyms(normalize_label(label), self.synonyms)

    def embed(self, label: str) -> ElementEmbedding:
        emb = self._cache.get(label)
        if emb is None:
            emb = embed_element(self.tokens(label), self.store)
            self._cache[label] = emb
        return emb

    def embed_element(self, element) -> ElementEmbedding:
        """Embed an ontology element, trying its synonyms if the label is all OOV."""
        emb = self.embed(element.label)
        if emb.degenerate:
            for syn in element.synonyms:
                alt = self.embed(syn)
                if not alt.degenerate:
                    return alt
        return emb


def as_embedder(store) -> LabelEmbedder:
    """Accept either a raw store or a configured :class:`LabelEmbedder`."""
    if isinstance(store, LabelEmbedder):
        return store
    if isinstance(store, EmbeddingStore):
        return LabelEmbedder(store)
    raise TypeError(f"expected an EmbeddingStore or LabelEmbedder, got {type(store).__name__}")
