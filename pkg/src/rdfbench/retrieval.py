"""Seed banks, embeddings, top-k retrieval and near-duplicate detection."""

from __future__ import annotations

import hashlib
import json
import math
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

from .policy import Category

_SPLIT_RE = re.compile(r"[\s" + re.escape(string.punctuation) + r"]+")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens split on whitespace and ASCII punctuation."""
    return [t for t in _SPLIT_RE.split(text.lower()) if t]


def jaccard(a: str, b: str) -> float:
    ta, tb = set(tokenize(a)), set(tokenize(b))
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


class DedupIndex:
    """Accepted questions, checked by token-set Jaccard.

    An inverted token index narrows candidates; the score itself is exact.
    """

    def __init__(self, threshold: float = 0.99):
        if not 0.0 < threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")
        self.threshold = threshold
        self._sets: list[frozenset[str]] = []
        self._questions: list[str] = []
        self._by_token: dict[str, list[int]] = {}

    def __len__(self) -> int:
        return len(self._questions)

    def nearest(self, question: str) -> tuple[float, Optional[str]]:
        tokens = frozenset(tokenize(question))
        if not tokens:
            empties = [i for i, s in enumerate(self._sets) if not s]
            return (1.0, self._questions[empties[0]]) if empties else (0.0, None)
        seen: set[int] = set()
        best, best_q = 0.0, None
        for tok in tokens:
            for i in self._by_token.get(tok, ()):
                if i in seen:
                    continue
                seen.add(i)
                other = self._sets[i]
                score = len(tokens & other) / len(tokens | other)
                if score > best:
                    best, best_q = score, self._questions[i]
        return best, best_q

    def is_duplicate(self, question: str) -> bool:
        return self.nearest(question)[0] >= self.threshold

    def add(self, question: str) -> bool:
        """Insert unless a near-duplicate exists; returns whether it was added."""
        if self.is_duplicate(question):
            return False
        idx = len(self._questions)
        tokens = frozenset(tokenize(question))
        self._sets.append(tokens)
        self._questions.append(question)
        for tok in tokens:
            self._by_token.setdefault(tok, []).append(idx)
        return True


def is_duplicate(question: str, prior: Iterable[str], threshold: float) -> bool:
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    return any(jaccard(question, q) >= threshold for q in prior)


# --------------------------------------------------------------------------
# Embeddings


class EmbeddingError(RuntimeError):
    error_class = "provider-error"
    retriable = True


class EmbeddingConfigError(ValueError):
    error_class = "config-error"


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: Optional[int]

    def embed(self, text: str) -> list[float]: ...


class MockEmbeddingProvider:
    """Hashed bag-of-words projection, L2-normalized."""

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.provider_id = f"mock-bow-{dim}"

    def embed(self, text: str) -> list[float]:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        vec = [0.0] * self.dim
        tokens = tokenize(text) or [text.strip()]
        for tok in tokens:
            h = int.from_bytes(hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest(), "big")
            vec[h % self.dim] += 1.0
        norm = math.sqrt(sum(v * v for v in vec))
        return [v / norm for v in vec]


class HttpEmbeddingProvider:
    """Embedding endpoint taking ``{model, input}``.

    Accepts either ``{"embedding": [...]}`` or ``{"embeddings": [[...]]}``
    in the response.
    """

    def __init__(self, endpoint: str, model: str, timeout: float = 60.0,
                 path: str = "/api/embed", client=None):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.path = path
        self.timeout = timeout
        self.dim: Optional[int] = None
        self.provider_id = f"http:{self.endpoint}{path}:{model}"
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> list[float]:
        import httpx

        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        try:
            resp = self._client.post(self.endpoint + self.path, json={"model": self.model, "input": text})
            resp.raise_for_status()
            data = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise EmbeddingError(f"embedding request failed: {exc}") from exc
        vec = data.get("embedding")
        if vec is None and data.get("embeddings"):
            vec = data["embeddings"][0]
        if not isinstance(vec, list) or not vec:
            raise EmbeddingError("embedding response carried no vector")
        vec = [float(v) for v in vec]
        if not all(math.isfinite(v) for v in vec):
            raise EmbeddingError("embedding contains non-finite values")
        if self.dim is None:
            self.dim = len(vec)
        elif len(vec) != self.dim:
            raise EmbeddingConfigError(f"embedding dimension changed from {self.dim} to {len(vec)}")
        return vec


class CachedEmbeddingProvider:
    """Wraps a provider with a JSONL file cache keyed by provider id and text hash."""

    def __init__(self, inner, path: Path | str):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.path = Path(path)
        self._cache: dict[str, list[float]] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        entry = json.loads(line)
                        self._cache[entry["key"]] = entry["embedding"]

    @property
    def dim(self) -> Optional[int]:
        return self.inner.dim

    def _key(self, text: str) -> str:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return f"{self.provider_id}:{digest}"

    def embed(self, text: str) -> list[float]:
        key = self._key(text)
        hit = self._cache.get(key)
        if hit is not None:
            return list(hit)
        vec = self.inner.embed(text)
        self._cache[key] = vec
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"key": key, "embedding": vec}) + "\n")
        return vec


def embed(text: str, provider) -> list[float]:
    return provider.embed(text)


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise EmbeddingConfigError(f"dimension mismatch: {len(a)} vs {len(b)}")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (na * nb)))


# --------------------------------------------------------------------------
# Seed banks


@dataclass
class SeedExample:
    question: str
    sparql: str
    category: Category
    embedding: list[float]
    phase_of_origin: int
    record_id: str = ""

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "category": self.category.value,
            "phase_of_origin": self.phase_of_origin,
            "question": self.question,
            "sparql": self.sparql,
            "embedding": self.embedding,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SeedExample":
        return cls(
            question=data["question"],
            sparql=data["sparql"],
            category=Category(data["category"]),
            embedding=[float(v) for v in data["embedding"]],
            phase_of_origin=int(data["phase_of_origin"]),
            record_id=data.get("record_id", ""),
        )


@dataclass
class Retrieval:
    hits: list[tuple[SeedExample, float]]
    shortage: bool = False

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.hits]


@dataclass
class SeedBank:
    threshold: float = 0.99
    entries: dict[Category, list[SeedExample]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for c in Category:
            self.entries.setdefault(c, [])

    @property
    def dim(self) -> Optional[int]:
        for items in self.entries.values():
            if items:
                return len(items[0].embedding)
        return None

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def questions(self) -> list[str]:
        return [e.question for c in Category for e in self.entries[c]]

    def add(self, example: SeedExample) -> bool:
        """Append unless a near-duplicate already sits in the same category."""
        dim = self.dim
        if dim is not None and len(example.embedding) != dim:
            raise EmbeddingConfigError(f"embedding dimension {len(example.embedding)} != bank dimension {dim}")
        items = self.entries[example.category]
        if any(jaccard(example.question, e.question) >= self.threshold for e in items):
            return False
        items.append(example)
        return True

    def top_k(self, query_embedding: Sequence[float], category: Category, k: int) -> Retrieval:
        if k < 1:
            raise ValueError("k must be >= 1")
        items = self.entries[Category(category)]
        scored = [(e, cosine(query_embedding, e.embedding), i) for i, e in enumerate(items)]
        scored.sort(key=lambda t: (-t[1], t[2]))
        hits = [(e, s) for e, s, _ in scored[:k]]
        return Retrieval(hits, shortage=len(items) < k)

    def save(self, directory: Path | str) -> list[Path]:
        """One JSONL file per category."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = []
        for c in Category:
            path = directory / f"{c.value}.jsonl"
            with path.open("w", encoding="utf-8") as fh:
                for e in self.entries[c]:
                    fh.write(json.dumps(e.to_dict(), ensure_ascii=False) + "\n")
            out.append(path)
        return out

    @classmethod
    def load(cls, directory: Path | str, threshold: float = 0.99) -> "SeedBank":
        bank = cls(threshold=threshold)
        for c in Category:
            path = Path(directory) / f"{c.value}.jsonl"
            if not path.exists():
                continue
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        bank.add(SeedExample.from_dict(json.loads(line)))
        return bank


def top_k(query_text: str, category: Category, bank: SeedBank, k: int, provider) -> Retrieval:
    return bank.top_k(provider.embed(query_text), category, k)
