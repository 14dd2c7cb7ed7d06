"""Phrase expansion and word replacement predictors.

A predictor answers two kinds of request: expand an abbreviation into
ranked full-phrase candidates, and suggest same-initial replacement words
for one slot of a phrase. Three interchangeable backends live here and in
``remote``: a constrained beam search over an n-gram model, an exhaustive
enumerator used as its test oracle, and a scripted fixture backend for
deterministic simulator tests.

Every candidate a backend returns lines up with the request's abbreviation
(one candidate word per abbreviation token); the simulator and UI rely on
that alignment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .abbrev import (
    Abbreviation,
    AbbrevKind,
    initials_abbrev,
    matches_abbreviation,
    normalize_for_match,
    render_compact,
)
from .corpus import CorpusError, PhraseToken, TokenKind, phrase_text, tokenize_phrase
from .lm import BOS, ConsonantMatches, Exact, HasPrefix, InitialIs, NgramModel

DEFAULT_K = 5
EXHAUSTIVE_CAP = 10**6


class PredictorError(RuntimeError):
    """A backend failed to produce a result (network, protocol, state)."""


class ExhaustiveCapError(PredictorError):
    """Exhaustive enumeration refused: candidate space exceeds the cap."""


@dataclass(frozen=True)
class AERequest:
    context: tuple[str, ...]
    abbrev: Abbreviation
    k: int = DEFAULT_K

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class PhraseCandidate:
    text: str
    score: float


@dataclass(frozen=True)
class FMRequest:
    context: tuple[str, ...]
    phrase_words: tuple[str, ...]
    masked_index: int
    initial: str
    k: int = DEFAULT_K

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.masked_index < len(self.phrase_words):
            raise ValueError(f"masked index {self.masked_index} out of range")
        word = self.phrase_words[self.masked_index]
        if not word or word[0].lower() != self.initial.lower():
            raise ValueError("initial must be the first letter of the masked word")


@dataclass(frozen=True)
class WordCandidate:
    word: str
    score: float


class Predictor(Protocol):
    def keyword_ae(self, request: AERequest) -> list[PhraseCandidate]: ...

    def fill_mask(self, request: FMRequest) -> list[WordCandidate]: ...


# ---------------------------------------------------------------------------
# n-gram backend


def _seed_context(model: NgramModel, context: Sequence[str]) -> tuple[str, ...]:
    """Words seeding the decoder: the concatenated context turns, or
    sentence-start padding when no context is available."""
    words: list[str] = []
    for turn in context:
        try:
            words.extend(tok.surface.lower() for tok in tokenize_phrase(turn))
        except CorpusError:
            continue
    if not words:
        return (BOS,) * max(model.order - 1, 1)
    return tuple(words)


def _slot_fanout(model: NgramModel, token, limit: int) -> list[str]:
    """All vocabulary words a slot admits, best-unigram-first, capped."""
    if token.kind is AbbrevKind.MID_PUNCT:
        constraints = [Exact(token.surface)]
    elif token.kind is AbbrevKind.INITIAL:
        constraints = [InitialIs(token.surface)]
    elif token.kind is AbbrevKind.COMPLETE:
        constraints = [Exact(token.surface)]
    else:  # incomplete keyword: prefix or consonant reading both count
        constraints = [HasPrefix(token.surface), ConsonantMatches(token.surface)]
    words: dict[str, None] = {}
    for constraint in constraints:
        for word in model.satisfying(constraint):
            words[word] = None
    pool = sorted(words, key=lambda w: (-model.score(w), w))
    return pool[:limit]


def _candidate_text(abbrev: Abbreviation, words: Sequence[str]) -> str:
    tokens = [
        PhraseToken(
            TokenKind.MID_PUNCT if t.kind is AbbrevKind.MID_PUNCT else TokenKind.WORD,
            w,
        )
        for t, w in zip(abbrev.tokens, words)
    ]
    return phrase_text(tokens)


def beam_expand(
    model: NgramModel,
    request: AERequest,
    beam_width: int | None = None,
) -> list[PhraseCandidate]:
    """Constrained beam search over the abbreviation's word slots.

    Each slot fans out to the vocabulary words admitted by its token; path
    scores accumulate n-gram log scores with the dialogue context as the
    seed. A slot nobody in the vocabulary satisfies yields an empty result.
    """
    width = beam_width if beam_width is not None else max(2 * request.k, 8)
    if width < request.k:
        raise PredictorError(f"beam width {width} smaller than k={request.k}")
    seed = _seed_context(model, request.context)
    beams: list[tuple[float, tuple[str, ...]]] = [(0.0, ())]
    for token in request.abbrev.tokens:
        fanout = _slot_fanout(model, token, width)
        if not fanout:
            return []
        grown: list[tuple[float, tuple[str, ...]]] = []
        for score, words in beams:
            context = seed + words
            for word in fanout:
                grown.append((score + model.score(word, context), words + (word,)))
        grown.sort(key=lambda item: (-item[0], item[1]))
        beams = grown[:width]
    return [
        PhraseCandidate(text=_candidate_text(request.abbrev, words), score=score)
        for score, words in beams[: request.k]
    ]


def exhaustive_expand(
    model: NgramModel,
    request: AERequest,
    cap: int = EXHAUSTIVE_CAP,
) -> list[PhraseCandidate]:
    """Full cartesian enumeration of the constrained candidate space.

    Exact global ranking; refuses when the product of slot fan-outs
    exceeds ``cap``. This is the oracle beam_expand is checked against.
    """
    fanouts: list[list[str]] = []
    size = 1
    for token in request.abbrev.tokens:
        fanout = _slot_fanout(model, token, limit=len(model.vocab) or 1)
        if not fanout:
            return []
        size *= len(fanout)
        if size > cap:
            raise ExhaustiveCapError(f"candidate space exceeds cap ({size} > {cap})")
        fanouts.append(fanout)
    seed = _seed_context(model, request.context)
    scored: list[tuple[float, tuple[str, ...]]] = []
    for combo in itertools.product(*fanouts):
        score = 0.0
        for i, word in enumerate(combo):
            score += model.score(word, seed + combo[:i])
        scored.append((score, combo))
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [
        PhraseCandidate(text=_candidate_text(request.abbrev, words), score=score)
        for score, words in scored[: request.k]
    ]


def total_fanout(model: NgramModel, abbrev: Abbreviation) -> int:
    """Product of per-slot fan-outs; the beam width at which no pruning occurs."""
    size = 1
    for token in abbrev.tokens:
        size *= len(_slot_fanout(model, token, limit=len(model.vocab) or 1))
    return size


def ngram_fill_mask(model: NgramModel, request: FMRequest) -> list[WordCandidate]:
    """Replacement words sharing the masked word's initial, n-gram ranked.

    A candidate is scored by its fit after the left context plus, when a
    right neighbor exists, how well it predicts that neighbor. The word
    currently in the slot is excluded; alternatives are wanted.
    """
    seed = _seed_context(model, request.context)
    left = seed + tuple(w.lower() for w in request.phrase_words[: request.masked_index])
    right = (
        request.phrase_words[request.masked_index + 1].lower()
        if request.masked_index + 1 < len(request.phrase_words)
        else None
    )
    current = request.phrase_words[request.masked_index].lower()
    scored = []
    for word in model.satisfying(InitialIs(request.initial)):
        if word == current:
            continue
        score = model.score(word, left)
        if right is not None:
            score += model.score(right, left + (word,))
        scored.append((score, word))
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [WordCandidate(word=w, score=s) for s, w in scored[: request.k]]


class NgramPredictor:
    """Predictor backed by a trained n-gram model."""

    def __init__(self, model: NgramModel, beam_width: int | None = None) -> None:
        self.model = model
        self.beam_width = beam_width

    def keyword_ae(self, request: AERequest) -> list[PhraseCandidate]:
        width = self.beam_width
        if width is not None and width < request.k:
            width = request.k
        return beam_expand(self.model, request, beam_width=width)

    def fill_mask(self, request: FMRequest) -> list[WordCandidate]:
        return ngram_fill_mask(self.model, request)


# ---------------------------------------------------------------------------
# scripted fixture backend


def _fm_key(phrase_words: Sequence[str], masked_index: int) -> tuple[str, int]:
    return (" ".join(w.lower() for w in phrase_words), masked_index)


class ScriptedPredictor:
    """Deterministic fixture backend for simulator and service tests.

    Expansion fixtures are keyed by the abbreviation's compact rendering;
    fill-in fixtures by (lowercased joined phrase, masked index). Unknown
    keys yield empty results. Fixture lists are truncated to the request's k.
    """

    def __init__(
        self,
        ae_fixtures: Mapping[str, Sequence[str]] | None = None,
        fm_fixtures: Mapping[tuple[str, int], Sequence[str]] | None = None,
    ) -> None:
        self.ae_fixtures = dict(ae_fixtures or {})
        self.fm_fixtures = {
            _fm_key(key[0].split(" "), key[1]): list(value)
            for key, value in (fm_fixtures or {}).items()
        }

    def keyword_ae(self, request: AERequest) -> list[PhraseCandidate]:
        texts = self.ae_fixtures.get(render_compact(request.abbrev), [])
        return [
            PhraseCandidate(text=t, score=float(-i))
            for i, t in enumerate(texts[: request.k])
        ]

    def fill_mask(self, request: FMRequest) -> list[WordCandidate]:
        words = self.fm_fixtures.get(
            _fm_key(request.phrase_words, request.masked_index), []
        )
        return [
            WordCandidate(word=w, score=float(-i))
            for i, w in enumerate(words[: request.k])
        ]


class OraclePredictor:
    """Always returns the wanted phrase first; for closed-form KSR checks.

    Built from tasks: requests are keyed by (context, compact initials
    abbreviation). Building refuses key collisions that map to different
    targets, which would make the oracle ambiguous.
    """

    def __init__(self, answers: Mapping[tuple[tuple[str, ...], str], str]) -> None:
        self.answers = dict(answers)

    @classmethod
    def from_tasks(cls, tasks, use_context: bool = True) -> "OraclePredictor":
        answers: dict[tuple[tuple[str, ...], str], str] = {}
        for task in tasks:
            context = task.context if use_context else ()
            key = (tuple(context), render_compact(initials_abbrev(task.target)))
            target = normalize_for_match(task.target_text)
            if key in answers and answers[key] != target:
                raise ValueError(f"oracle key collision for {key!r}")
            answers[key] = target
        return cls(answers)

    def keyword_ae(self, request: AERequest) -> list[PhraseCandidate]:
        key = (tuple(request.context), render_compact(request.abbrev))
        target = self.answers.get(key)
        return [] if target is None else [PhraseCandidate(text=target, score=0.0)]

    def fill_mask(self, request: FMRequest) -> list[WordCandidate]:
        return []


def collision_free_tasks(tasks, use_context: bool = True) -> list:
    """Drop tasks whose (context, initials) key is ambiguous.

    An oracle keyed by context and abbreviation cannot answer two different
    targets for the same key; corpora with repeated openers produce such
    clashes on first turns. Order is preserved.
    """
    groups: dict[tuple[tuple[str, ...], str], set[str]] = {}
    for task in tasks:
        context = tuple(task.context) if use_context else ()
        key = (context, render_compact(initials_abbrev(task.target)))
        groups.setdefault(key, set()).add(normalize_for_match(task.target_text))
    kept = []
    for task in tasks:
        context = tuple(task.context) if use_context else ()
        key = (context, render_compact(initials_abbrev(task.target)))
        if len(groups[key]) == 1:
            kept.append(task)
    return kept


def validate_candidates(
    request: AERequest, candidates: Sequence[PhraseCandidate]
) -> list[str]:
    """Return a list of violations (empty when every candidate aligns)."""
    problems = []
    for cand in candidates:
        try:
            tokens = tokenize_phrase(cand.text)
        except CorpusError:
            problems.append(f"untokenizable candidate {cand.text!r}")
            continue
        if not matches_abbreviation(tokens, request.abbrev):
            problems.append(f"candidate {cand.text!r} does not match the abbreviation")
    return problems
