"""Rank documentation sections for a query: Okapi BM25 or embedding cosine."""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .docs import DocCorpus, DocSection

_SPLIT = re.compile(r"[^a-z0-9]+")


class RetrievalUnavailable(RuntimeError):
    """The embedding backend failed; callers may fall back to BM25."""


@dataclass(frozen=True)
class RetrieverConfig:
    kind: str = "bm25"  # bm25 | embedding
    k1: float = 1.2
    b: float = 0.75
    top_k: int = 1

    def __post_init__(self):
        if self.kind not in ("bm25", "embedding"):
            raise ValueError(f"unknown retriever kind {self.kind!r}")
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be positive")

    @classmethod
    def from_dict(cls, d: dict | None) -> "RetrieverConfig":
        return cls(**(d or {}))


@dataclass(frozen=True)
class ScoredSection:
    section_id: str
    score: float


def tokenize(text: str) -> list[str]:
    """Lower-case, split on non-alphanumerics, strip a plural 's' (len >= 4)."""
    out = []
    for term in _SPLIT.split(text.lower()):
        if not term:
            continue
        if len(term) >= 4 and term.endswith("s"):
            term = term[:-1]
        out.append(term)
    return out


def section_text(section: DocSection) -> str:
    return " ".join([section.type_name, section.description, *section.examples])


@dataclass(frozen=True)
class Bm25Index:
    section_ids: tuple[str, ...]
    term_counts: tuple[dict[str, int], ...]
    lengths: tuple[int, ...]
    doc_freq: dict[str, int]
    avg_length: float

    @property
    def n_docs(self) -> int:
        return len(self.section_ids)


def build_index(corpus: DocCorpus, cfg: RetrieverConfig | None = None) -> Bm25Index:
    if not corpus.sections:
        raise ValueError("cannot index an empty corpus")
    counts, lengths = [], []
    df: Counter = Counter()
    for s in corpus.sections:
        toks = tokenize(section_text(s))
        c = Counter(toks)
        counts.append(dict(c))
        lengths.append(len(toks))
        df.update(c.keys())
    avg = sum(lengths) / len(lengths)
    return Bm25Index(tuple(s.section_id for s in corpus.sections), tuple(counts), tuple(lengths), dict(df), avg)


def idf(index: Bm25Index, term: str) -> float:
    n, df = index.n_docs, index.doc_freq.get(term, 0)
    return max(0.0, math.log(1.0 + (n - df + 0.5) / (df + 0.5)))


def bm25_scores(index: Bm25Index, query: str, cfg: RetrieverConfig | None = None) -> list[float]:
    """Score every section; each query token occurrence contributes once."""
    cfg = cfg or RetrieverConfig()
    terms = tokenize(query)
    scores = []
    for counts, dl in zip(index.term_counts, index.lengths):
        norm = cfg.k1 * (1.0 - cfg.b + cfg.b * dl / index.avg_length) if index.avg_length else cfg.k1
        total = 0.0
        for t in terms:
            tf = counts.get(t, 0)
            if tf:
                total += idf(index, t) * tf * (cfg.k1 + 1.0) / (tf + norm)
        scores.append(total)
    return scores


def _rank(ids: Sequence[str], scores: Sequence[float], top_k: int, keep_zero: bool) -> list[ScoredSection]:
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], i))
    out = [ScoredSection(ids[i], scores[i]) for i in order if keep_zero or scores[i] > 0]
    return out[:top_k]


def retrieve(index: Bm25Index, query: str, cfg: RetrieverConfig | None = None) -> list[ScoredSection]:
    """Top-k sections by BM25; sections sharing no query term are dropped."""
    cfg = cfg or RetrieverConfig()
    if not tokenize(query):
        return []
    return _rank(index.section_ids, bm25_scores(index, query, cfg), cfg.top_k, keep_zero=False)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise ValueError("vector dimensions differ")
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0 or nv == 0:
        return 0.0
    return dot / (nu * nv)


class EmbeddingRetriever:
    """Cosine ranking over section vectors computed once per embedder model.

    ``embedder`` maps text to a vector.  Section vectors are cached in memory
    and, when ``cache_path`` is given, in a JSON sidecar keyed by
    ``model_name`` and section id.
    """

    def __init__(self, corpus: DocCorpus, embedder: Callable[[str], Sequence[float]],
                 model_name: str = "default", cache_path: str | Path | None = None):
        self.corpus = corpus
        self.embedder = embedder
        self.model_name = model_name
        self.cache_path = Path(cache_path) if cache_path else None
        self._vectors: dict[str, list[float]] | None = None

    def _embed(self, text: str) -> list[float]:
        try:
            return [float(x) for x in self.embedder(text)]
        except RetrievalUnavailable:
            raise
        except Exception as e:
            raise RetrievalUnavailable(f"embedding failed: {e}") from e

    def _load_sidecar(self) -> dict:
        if self.cache_path and self.cache_path.exists():
            return json.loads(self.cache_path.read_text(encoding="utf-8"))
        return {}

    def section_vectors(self) -> dict[str, list[float]]:
        if self._vectors is None:
            sidecar = self._load_sidecar()
            cached = sidecar.get(self.model_name, {})
            vectors = {}
            for s in self.corpus.sections:
                vectors[s.section_id] = cached.get(s.section_id) or self._embed(section_text(s))
            if self.cache_path and vectors != cached:
                sidecar[self.model_name] = vectors
                self.cache_path.write_text(json.dumps(sidecar, sort_keys=True), encoding="utf-8")
            self._vectors = vectors
        return self._vectors

    def retrieve(self, query: str, cfg: RetrieverConfig | None = None) -> list[ScoredSection]:
        cfg = cfg or RetrieverConfig(kind="embedding")
        if not query.strip():
            return []
        vectors = self.section_vectors()
        q = self._embed(query)
        ids = [s.section_id for s in self.corpus.sections]
        scores = [cosine(q, vectors[i]) for i in ids]
        return _rank(ids, scores, cfg.top_k, keep_zero=True)


def retrieve_embedding(corpus: DocCorpus, query: str, cfg: RetrieverConfig | None,
                       embedder: Callable[[str], Sequence[float]]) -> list[ScoredSection]:
    return EmbeddingRetriever(corpus, embedder).retrieve(query, cfg)
