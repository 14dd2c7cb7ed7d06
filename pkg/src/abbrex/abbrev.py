"""Abbreviation schemes, rendering, matching, and match normalization.

Three schemes are supported:

* initials-only: every word becomes its lowercase first character;
  mid-sentence punctuation is kept, sentence-final punctuation dropped,
  and contractions ("you're") abbreviate to a single initial.
* complete keywords: selected words are spelled out in full inside the
  initialism, preserving word order.
* incomplete keywords: selected words are shortened to a prefix of at
  least two characters, or to a consonant skeleton (first letter kept,
  later vowels removed), truncated to a length limit.

An abbreviation renders two ways: the compact form the user types
("ishpit bedroom") and the spaced form fed to LLM prompts
("i s h p i t bedroom").
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .corpus import FINAL_PUNCT, PhraseToken, TokenKind, normalize_text

VOWELS = frozenset("aeiou")


class AbbrevError(ValueError):
    """Raised for abbreviation requests that violate the scheme rules."""


class AbbrevKind(Enum):
    INITIAL = "initial"
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"
    MID_PUNCT = "punct"


KEYWORD_KINDS = frozenset({AbbrevKind.COMPLETE, AbbrevKind.INCOMPLETE})


@dataclass(frozen=True)
class AbbrevToken:
    kind: AbbrevKind
    surface: str

    def is_keyword(self) -> bool:
        return self.kind in KEYWORD_KINDS


@dataclass(frozen=True)
class Abbreviation:
    tokens: tuple[AbbrevToken, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise AbbrevError("abbreviation must have at least one token")

    def keyword_count(self) -> int:
        return sum(1 for t in self.tokens if t.is_keyword())

    def unit_count(self) -> int:
        """Initials plus keywords, punctuation excluded."""
        return sum(1 for t in self.tokens if t.kind is not AbbrevKind.MID_PUNCT)


@dataclass(frozen=True)
class KeywordSpec:
    """How to abbreviate one selected word: complete, or limited shorthand."""

    scheme: str  # "complete" | "prefix" | "consonant"
    limit: int | None = None  # required for prefix/consonant, >= 2


def initials_abbrev(tokens: Sequence[PhraseToken]) -> Abbreviation:
    """Abbreviate every word to its lowercase initial, keeping punctuation."""
    out: list[AbbrevToken] = []
    for tok in tokens:
        if tok.kind is TokenKind.MID_PUNCT:
            out.append(AbbrevToken(AbbrevKind.MID_PUNCT, tok.surface))
        else:
            first = tok.surface[0].lower()
            if not first.isalnum():
                raise AbbrevError(f"word {tok.surface!r} has no alphanumeric initial")
            out.append(AbbrevToken(AbbrevKind.INITIAL, first))
    return Abbreviation(tuple(out))


def prefix_shorthand(word: str, limit: int) -> str:
    """First min(limit, len(word)) characters, lowercased. limit >= 2."""
    if limit < 2:
        raise AbbrevError(f"shorthand limit must be >= 2, got {limit}")
    return word[:limit].lower()


def consonant_shorthand(word: str, limit: int) -> str:
    """Keep the first letter, drop later vowels, truncate to limit, lowercase."""
    if limit < 2:
        raise AbbrevError(f"shorthand limit must be >= 2, got {limit}")
    lowered = word.lower()
    kept = lowered[0] + "".join(c for c in lowered[1:] if c not in VOWELS)
    return kept[:limit]


def keyword_abbrev(
    tokens: Sequence[PhraseToken],
    keyword_spec: Mapping[int, KeywordSpec],
) -> Abbreviation:
    """Replace selected word positions with keyword tokens.

    Positions index into ``tokens`` and must refer to words. At least one
    word must remain a plain initial. A shorthand that degenerates (equal
    to the whole word, or shorter than two characters) is emitted as a
    complete keyword so the token invariants hold.
    """
    word_positions = [i for i, t in enumerate(tokens) if t.is_word()]
    if not word_positions:
        raise AbbrevError("phrase has no words")
    for pos in keyword_spec:
        if pos < 0 or pos >= len(tokens) or not tokens[pos].is_word():
            raise AbbrevError(f"keyword position {pos} is not a word position")
    if len(keyword_spec) >= len(word_positions):
        raise AbbrevError("at least one word must stay a non-keyword")

    out: list[AbbrevToken] = []
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.MID_PUNCT:
            out.append(AbbrevToken(AbbrevKind.MID_PUNCT, tok.surface))
            continue
        spec = keyword_spec.get(i)
        if spec is None:
            out.append(AbbrevToken(AbbrevKind.INITIAL, tok.surface[0].lower()))
            continue
        word = tok.surface.lower()
        if spec.scheme == "complete":
            out.append(AbbrevToken(AbbrevKind.COMPLETE, word))
            continue
        if spec.limit is None:
            raise AbbrevError(f"{spec.scheme} keyword needs a length limit")
        if spec.scheme == "prefix":
            short = prefix_shorthand(word, spec.limit)
        elif spec.scheme == "consonant":
            short = consonant_shorthand(word, spec.limit)
        else:
            raise AbbrevError(f"unknown keyword scheme {spec.scheme!r}")
        if len(short) < 2 or len(short) >= len(word):
            out.append(AbbrevToken(AbbrevKind.COMPLETE, word))
        else:
            out.append(AbbrevToken(AbbrevKind.INCOMPLETE, short))
    return Abbreviation(tuple(out))


def render_compact(abbrev: Abbreviation) -> str:
    """The UI surface form: initials/punctuation run together, keywords spaced."""
    parts: list[str] = []
    prev_keyword = False
    for i, tok in enumerate(abbrev.tokens):
        if i > 0 and (tok.is_keyword() or prev_keyword):
            parts.append(" ")
        parts.append(tok.surface)
        prev_keyword = tok.is_keyword()
    return "".join(parts)


def render_spaced(abbrev: Abbreviation) -> str:
    """The LLM shorthand form: one space between every token."""
    return " ".join(tok.surface for tok in abbrev.tokens)


def matches_abbreviation(
    phrase_tokens: Sequence[PhraseToken], abbrev: Abbreviation
) -> bool:
    """Check that a phrase lines up one-to-one with an abbreviation.

    Initials must match the word's first letter case-insensitively,
    complete keywords the whole word, incomplete keywords either a prefix
    or a consonant shorthand of the word; punctuation matches exactly.
    """
    if len(phrase_tokens) != len(abbrev.tokens):
        return False
    for ptok, atok in zip(phrase_tokens, abbrev.tokens):
        if atok.kind is AbbrevKind.MID_PUNCT:
            if ptok.kind is not TokenKind.MID_PUNCT or ptok.surface != atok.surface:
                return False
            continue
        if not ptok.is_word():
            return False
        word = ptok.surface.lower()
        surface = atok.surface.lower()
        if atok.kind is AbbrevKind.INITIAL:
            if len(surface) != 1 or not word.startswith(surface):
                return False
        elif atok.kind is AbbrevKind.COMPLETE:
            if word != surface:
                return False
        elif atok.kind is AbbrevKind.INCOMPLETE:
            if len(surface) < 2:
                return False
            is_prefix = word.startswith(surface)
            is_consonant = consonant_shorthand(word, len(surface)) == surface
            if not (is_prefix or is_consonant):
                return False
    return True


_WS_RE = re.compile(r"\s+")


def normalize_for_match(text: str) -> str:
    """Normalization used for exact-match comparison of phrases.

    Collapses whitespace, trims, lowercases, and strips one trailing
    sentence-final punctuation mark. Idempotent.
    """
    folded = unicodedata.normalize("NFC", text)
    folded = normalize_text(folded).lower()
    folded = _WS_RE.sub(" ", folded).strip()
    if folded and folded[-1] in FINAL_PUNCT:
        folded = folded[:-1].rstrip()
    return folded


# Wire format used by the HTTP service and fixture files.

_KIND_BY_WIRE = {k.value: k for k in AbbrevKind}


def abbrev_to_wire(abbrev: Abbreviation) -> list[dict]:
    return [{"kind": t.kind.value, "surface": t.surface} for t in abbrev.tokens]


def abbrev_from_wire(tokens: Iterable[Mapping]) -> Abbreviation:
    out = []
    for i, tok in enumerate(tokens):
        kind = _KIND_BY_WIRE.get(tok.get("kind"))
        surface = tok.get("surface")
        if kind is None or not isinstance(surface, str) or not surface:
            raise AbbrevError(f"invalid abbreviation token at index {i}: {tok!r}")
        if kind is AbbrevKind.INITIAL and len(surface) != 1:
            raise AbbrevError(f"invalid abbreviation token at index {i}: initial must be one character")
        if kind is AbbrevKind.INCOMPLETE and len(surface) < 2:
            raise AbbrevError(f"invalid abbreviation token at index {i}: shorthand needs >= 2 characters")
        if kind is AbbrevKind.MID_PUNCT and len(surface) != 1:
            raise AbbrevError(f"invalid abbreviation token at index {i}: punctuation must be one character")
        out.append(AbbrevToken(kind, surface.lower() if kind is not AbbrevKind.MID_PUNCT else surface))
    return Abbreviation(tuple(out))
