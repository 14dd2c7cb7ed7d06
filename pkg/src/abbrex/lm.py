"""Backoff n-gram language model for expansion, fill-in, and the baseline.

Scores use stupid backoff: relative frequency at the longest order with a
nonzero count, multiplied by a fixed backoff factor per level backed off.
Constrained candidate lookup (by initial letter, prefix, consonant
skeleton, or exact word) is served from a first-letter index and a prefix
trie, since it is the hot path of beam search.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .abbrev import consonant_shorthand

BOS = "<s>"
DEFAULT_BACKOFF = 0.4
DEFAULT_ORDER = 3
# Floor for out-of-vocabulary words; far below any in-vocabulary score.
OOV_LOG_SCORE = -30.0

MODEL_FORMAT = "abbrex-ngram"
MODEL_VERSION = 1


class LmError(ValueError):
    pass


@dataclass(frozen=True)
class InitialIs:
    char: str


@dataclass(frozen=True)
class HasPrefix:
    prefix: str


@dataclass(frozen=True)
class ConsonantMatches:
    shorthand: str


@dataclass(frozen=True)
class Exact:
    word: str


Constraint = InitialIs | HasPrefix | ConsonantMatches | Exact


class _TrieNode:
    __slots__ = ("children", "word")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.word: str | None = None


class NgramModel:
    """Immutable after training; safe for concurrent readers."""

    def __init__(
        self,
        order: int,
        tables: list[dict[tuple[str, ...], Counter]],
        backoff: float = DEFAULT_BACKOFF,
    ) -> None:
        if order < 1:
            raise LmError(f"order must be >= 1, got {order}")
        self.order = order
        self.backoff = backoff
        self._log_backoff = math.log(backoff)
        # tables[k] maps a (k-1)-word context tuple to a Counter of next words
        self._tables = tables
        self._totals: list[dict[tuple[str, ...], int]] = [
            {ctx: sum(counter.values()) for ctx, counter in table.items()}
            for table in tables
        ]
        unigrams = tables[0].get((), Counter())
        self.vocab: set[str] = set(unigrams)
        self.total_tokens = self._totals[0].get((), 0)
        self._by_initial: dict[str, list[str]] = defaultdict(list)
        self._trie_root = _TrieNode()
        for word in sorted(self.vocab):
            self._by_initial[word[0]].append(word)
            node = self._trie_root
            for ch in word:
                node = node.children.setdefault(ch, _TrieNode())
            node.word = word

    # -- scoring ------------------------------------------------------------

    def score(self, word: str, context: Sequence[str] = ()) -> float:
        """Stupid-backoff log score of ``word`` after ``context``."""
        if word not in self.vocab:
            return OOV_LOG_SCORE
        k = min(self.order, len(context) + 1)
        ctx = tuple(context[len(context) - (k - 1) :]) if k > 1 else ()
        penalty = 0.0
        while True:
            counter = self._tables[k - 1].get(ctx)
            if counter is not None:
                count = counter.get(word, 0)
                if count > 0:
                    total = self._totals[k - 1][ctx]
                    return math.log(count / total) + penalty
            if k == 1:
                return OOV_LOG_SCORE
            k -= 1
            ctx = ctx[1:]
            penalty += self._log_backoff

    def count(self, ngram: Sequence[str]) -> int:
        if not 1 <= len(ngram) <= self.order:
            raise LmError(f"ngram length must be in [1, {self.order}]")
        counter = self._tables[len(ngram) - 1].get(tuple(ngram[:-1]))
        return counter.get(ngram[-1], 0) if counter is not None else 0

    # -- constrained lookup ---------------------------------------------------

    def satisfying(self, constraint: Constraint) -> list[str]:
        if isinstance(constraint, Exact):
            word = constraint.word.lower()
            return [word] if word in self.vocab else []
        if isinstance(constraint, InitialIs):
            return self._by_initial.get(constraint.char.lower(), [])
        if isinstance(constraint, HasPrefix):
            prefix = constraint.prefix.lower()
            node = self._trie_root
            for ch in prefix:
                node = node.children.get(ch)
                if node is None:
                    return []
            found: list[str] = []
            stack = [node]
            while stack:
                cur = stack.pop()
                if cur.word is not None:
                    found.append(cur.word)
                stack.extend(cur.children.values())
            return sorted(found)
        if isinstance(constraint, ConsonantMatches):
            short = constraint.shorthand.lower()
            bucket = self._by_initial.get(short[0], []) if short else []
            return [w for w in bucket if consonant_shorthand(w, len(short)) == short]
        raise LmError(f"unknown constraint {constraint!r}")

    def candidates(
        self,
        context: Sequence[str],
        constraint: Constraint,
        k: int,
    ) -> list[str]:
        """Top-k vocabulary words satisfying ``constraint``, ranked by score.

        Ties break lexicographically, so the ranking is deterministic for a
        given training corpus.
        """
        if k < 1:
            raise LmError(f"k must be >= 1, got {k}")
        pool = self.satisfying(constraint)
        scored = sorted(pool, key=lambda w: (-self.score(w, context), w))
        return scored[:k]

    def completions(self, prefix: str, context: Sequence[str], k: int) -> list[str]:
        """Word completions for a typed prefix; empty prefix predicts next words."""
        return self.candidates(context, HasPrefix(prefix), k)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        ngrams: dict[str, dict[str, int]] = {}
        for table in self._tables:
            for ctx, counter in table.items():
                for word, count in counter.items():
                    key = " ".join(ctx + (word,))
                    ngrams.setdefault(str(len(ctx) + 1), {})[key] = count
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "order": self.order,
            "backoff": self.backoff,
            "ngrams": ngrams,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "NgramModel":
        if obj.get("format") != MODEL_FORMAT:
            raise LmError("not an n-gram model file")
        if obj.get("version") != MODEL_VERSION:
            raise LmError(f"unsupported model version {obj.get('version')!r}")
        order = int(obj["order"])
        tables: list[dict[tuple[str, ...], Counter]] = [{} for _ in range(order)]
        for k_str, grams in obj["ngrams"].items():
            k = int(k_str)
            for key, count in grams.items():
                words = tuple(key.split(" "))
                if len(words) != k:
                    raise LmError(f"bad {k}-gram key {key!r}")
                table = tables[k - 1]
                table.setdefault(words[:-1], Counter())[words[-1]] = count
        return cls(order=order, tables=tables, backoff=float(obj["backoff"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train(
    sentences: Iterable[Sequence[str]],
    order: int = DEFAULT_ORDER,
    backoff: float = DEFAULT_BACKOFF,
) -> NgramModel:
    """Count all k-grams (k <= order) with sentence-start padding.

    Sentences are sequences of token surfaces (words and mid-sentence
    punctuation); they are lowercased here. Counts at each order only cover
    n-grams ending on a real token, so boundary markers appear in contexts
    but not as predicted words.
    """
    if order < 1:
        raise LmError(f"order must be >= 1, got {order}")
    tables: list[dict[tuple[str, ...], Counter]] = [{} for _ in range(order)]
    trained = False
    for sentence in sentences:
        words = [w.lower() for w in sentence if w]
        if not words:
            continue
        trained = True
        padded = [BOS] * (order - 1) + words
        for j in range(len(words)):
            end = j + order - 1
            for k in range(1, order + 1):
                ctx = tuple(padded[end - k + 1 : end])
                word = padded[end]
                tables[k - 1].setdefault(ctx, Counter())[word] += 1
    if not trained:
        raise LmError("empty training corpus")
    return NgramModel(order=order, tables=tables, backoff=backoff)
