"""Fine-tuning data synthesis and predictor evaluation.

Synthesizes context/shorthand/full triplets for phrase expansion and
context/phrase/word triplets for masked-word prediction from dialogue
corpora. Keyword counts, shorthand length limits, and the prefix/consonant
split follow fixed uniform distributions; generation is deterministic for
a given seed, with per-dialogue random streams so parallel generation
cannot reorder draws.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .abbrev import (
    Abbreviation,
    initials_abbrev,
    keyword_abbrev,
    KeywordSpec,
    normalize_for_match,
    render_spaced,
)
from .corpus import Dialogue, TokenKind, TurnTask, phrase_text, tokenize_phrase, CorpusError
from .expand import AERequest, FMRequest, Predictor
from .stopwords import is_stopword

#: Published top-5 exact-match reference points (initials-only, dialogue
#: context, second turns); reported for orientation, never asserted.
REFERENCE_TOPK = {
    "initials-only top-5, v1": 0.726,
    "initials-only top-5, v2": 0.763,
}

SCHEME_INITIALS = "initials"
SCHEME_COMPLETE = "complete"
SCHEME_INCOMPLETE = "incomplete"


@dataclass(frozen=True)
class AETriplet:
    context: str  # brace-delimited previous turns, may be empty
    shorthand: str  # spaced rendering of the abbreviation
    full: str  # the target phrase
    scheme: str = SCHEME_INITIALS
    kw_count: int = 0
    kw_scheme: str | None = None  # prefix | consonant, incomplete scheme only
    nl_limits: tuple[int, ...] = ()

    def to_record(self) -> dict:
        return {"context": self.context, "shorthand": self.shorthand, "full": self.full}


@dataclass(frozen=True)
class FMTriplet:
    context: str
    phrase: str  # target with one word replaced by initial + "_"
    word: str  # the masked word
    masked_index: int = 0

    def to_record(self) -> dict:
        return {"context": self.context, "phrase": self.phrase, "word": self.word}


@dataclass(frozen=True)
class DatagenConfig:
    complete_kw_range: tuple[int, int] = (1, 3)
    incomplete_kw_range: tuple[int, int] = (1, 5)
    nl_range: tuple[int, int] = (2, 5)
    prefix_fraction: float = 0.5
    seed: int = 0
    draws_per_sentence: int = 1


def _rng_for(seed: int, dialogue_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{dialogue_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def render_context(turns: Sequence[str]) -> str:
    return "".join("{" + t + "}" for t in turns)


def _eligible_turns(dialogue: Dialogue):
    for index, turn in enumerate(dialogue.turns):
        try:
            tokens = tokenize_phrase(turn.text)
        except CorpusError:
            continue
        context = render_context([t.text for t in dialogue.turns[:index]])
        yield context, tokens


def synth_ae(
    dialogues: Iterable[Dialogue],
    scheme: str,
    cfg: DatagenConfig = DatagenConfig(),
) -> list[AETriplet]:
    """Synthesize expansion triplets for one abbreviation scheme.

    ``initials`` yields one triplet per turn. ``complete`` draws the
    keyword count uniformly from [1, 3], ``incomplete`` from [1, 5] with a
    per-keyword length limit uniform on [2, 5] and an even prefix/consonant
    split; both always leave at least one word as a bare initial.
    Deduplicated on (context, shorthand, full).
    """
    if scheme not in (SCHEME_INITIALS, SCHEME_COMPLETE, SCHEME_INCOMPLETE):
        raise ValueError(f"unknown scheme {scheme!r}")
    out: list[AETriplet] = []
    seen: set[tuple[str, str, str]] = set()
    for dialogue in dialogues:
        rng = _rng_for(cfg.seed, dialogue.id)
        for context, tokens in _eligible_turns(dialogue):
            full = phrase_text(tokens)
            for _ in range(cfg.draws_per_sentence if scheme != SCHEME_INITIALS else 1):
                triplet = _synth_one(scheme, context, tokens, full, cfg, rng)
                if triplet is None:
                    continue
                key = (triplet.context, triplet.shorthand, triplet.full)
                if key not in seen:
                    seen.add(key)
                    out.append(triplet)
    return out


def _synth_one(
    scheme: str,
    context: str,
    tokens,
    full: str,
    cfg: DatagenConfig,
    rng: random.Random,
) -> AETriplet | None:
    if scheme == SCHEME_INITIALS:
        return AETriplet(
            context=context,
            shorthand=render_spaced(initials_abbrev(tokens)),
            full=full,
            scheme=scheme,
        )
    word_positions = [i for i, t in enumerate(tokens) if t.is_word()]
    if len(word_positions) < 2:  # a keyword must leave one plain initial
        return None
    if scheme == SCHEME_COMPLETE:
        low, high = cfg.complete_kw_range
        count = min(rng.randint(low, high), len(word_positions) - 1)
        positions = sorted(rng.sample(word_positions, count))
        spec = {p: KeywordSpec("complete") for p in positions}
        abbrev = keyword_abbrev(tokens, spec)
        return AETriplet(
            context=context,
            shorthand=render_spaced(abbrev),
            full=full,
            scheme=scheme,
            kw_count=count,
        )
    low, high = cfg.incomplete_kw_range
    requested = rng.randint(low, high)
    count = min(requested, len(word_positions) - 1)
    positions = sorted(rng.sample(word_positions, count))
    kw_scheme = "prefix" if rng.random() < cfg.prefix_fraction else "consonant"
    nl_low, nl_high = cfg.nl_range
    limits = tuple(rng.randint(nl_low, nl_high) for _ in positions)
    spec = {p: KeywordSpec(kw_scheme, limit) for p, limit in zip(positions, limits)}
    abbrev = keyword_abbrev(tokens, spec)
    return AETriplet(
        context=context,
        shorthand=render_spaced(abbrev),
        full=full,
        scheme=SCHEME_INCOMPLETE,
        kw_count=requested,
        kw_scheme=kw_scheme,
        nl_limits=limits,
    )


def _maskable_positions(tokens) -> list[int]:
    # Words starting with a digit are never masked; punctuation is not a word.
    return [
        i
        for i, t in enumerate(tokens)
        if t.kind is TokenKind.WORD and not t.surface[0].isdigit()
    ]


def synth_fillmask(
    dialogues: Iterable[Dialogue],
    cfg: DatagenConfig = DatagenConfig(),
) -> list[FMTriplet]:
    """Mask one random eligible word per turn; keep the trailing punctuation
    of the original turn in the phrase part."""
    out: list[FMTriplet] = []
    seen: set[tuple[str, str, str]] = set()
    for dialogue in dialogues:
        rng = _rng_for(cfg.seed, dialogue.id)
        for index, turn in enumerate(dialogue.turns):
            try:
                tokens = tokenize_phrase(turn.text)
            except CorpusError:
                continue
            positions = _maskable_positions(tokens)
            if not positions:
                continue
            masked_index = rng.choice(positions)
            word = tokens[masked_index].surface
            shown = [t.surface for t in tokens]
            shown[masked_index] = word[0] + "_"
            rebuilt = []
            for tok, surface in zip(tokens, shown):
                rebuilt.append((tok.kind, surface))
            phrase = _join_masked(rebuilt) + _trailing_punct(turn.text)
            context = render_context([t.text for t in dialogue.turns[:index]])
            triplet = FMTriplet(
                context=context, phrase=phrase, word=word, masked_index=masked_index
            )
            key = (triplet.context, triplet.phrase, triplet.word)
            if key not in seen:
                seen.add(key)
                out.append(triplet)
    return out


def _join_masked(parts: Sequence[tuple[TokenKind, str]]) -> str:
    joined: list[str] = []
    for kind, surface in parts:
        if kind is TokenKind.MID_PUNCT and joined:
            joined[-1] += surface
        else:
            joined.append(surface)
    return " ".join(joined)


def _trailing_punct(text: str) -> str:
    stripped = text.rstrip()
    return stripped[-1] if stripped and stripped[-1] in ".!?" else ""


def write_jsonl(records: Iterable, path) -> None:
    from pathlib import Path

    lines = [json.dumps(r.to_record(), ensure_ascii=False, sort_keys=True) for r in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_tsv(records: Iterable, path) -> None:
    from pathlib import Path

    rows = []
    for r in records:
        rec = r.to_record()
        rows.append("\t".join(rec[key].replace("\t", " ") for key in rec))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def manifest(counts_by_corpus: dict[str, dict[str, int]]) -> str:
    """A counts manifest mirroring the layout of the fine-tuning data table."""
    return json.dumps({"examples": counts_by_corpus}, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# evaluation


def eval_topk(
    predictor: Predictor,
    tasks: Sequence[TurnTask],
    k: int = 5,
    abbrev_fn: Callable[[TurnTask], Abbreviation] | None = None,
    use_context: bool = True,
) -> float:
    """Fraction of tasks whose normalized target is among the top-k
    expansions of its abbreviation (initials-only unless overridden)."""
    if not tasks:
        raise ValueError("no tasks to evaluate")
    hits = 0
    for task in tasks:
        abbrev = abbrev_fn(task) if abbrev_fn else initials_abbrev(task.target)
        request = AERequest(
            context=tuple(task.context) if use_context else (),
            abbrev=abbrev,
            k=k,
        )
        wanted = normalize_for_match(task.target_text)
        candidates = predictor.keyword_ae(request)
        if any(normalize_for_match(c.text) == wanted for c in candidates):
            hits += 1
    return hits / len(tasks)


def _keyword_abbrev_for(
    task: TurnTask, kw_count: int, nl_limit: int | None, rng: random.Random
) -> Abbreviation | None:
    word_positions = [i for i, t in enumerate(task.target) if t.is_word()]
    if len(word_positions) < 2:
        return None
    count = min(kw_count, len(word_positions) - 1)
    positions = rng.sample(word_positions, count)
    if nl_limit is None:
        spec = {p: KeywordSpec("complete") for p in positions}
    else:
        spec = {p: KeywordSpec("prefix", nl_limit) for p in positions}
    return keyword_abbrev(task.target, spec)


def eval_curves(
    predictor: Predictor,
    tasks: Sequence[TurnTask],
    k: int = 5,
    kw_counts: Sequence[int] = (1, 2, 3, 4, 5),
    nl_limits: Sequence[int | None] = (2, 3, 4, 5, None),
    fm_predictor: Predictor | None = None,
    seed: int = 0,
) -> list[dict]:
    """Accuracy tables: expansion accuracy per (keyword count, length
    limit) cell, per turn index with and without context, and masked-word
    accuracy split by stop words, with and without context."""
    if not tasks:
        raise ValueError("no tasks to evaluate")
    rows: list[dict] = []
    for kw_count in kw_counts:
        for nl_limit in nl_limits:
            rng = random.Random(seed + kw_count * 101 + (nl_limit or 0))
            eligible = []
            abbrevs = []
            for task in tasks:
                abbrev = _keyword_abbrev_for(task, kw_count, nl_limit, rng)
                if abbrev is not None:
                    eligible.append(task)
                    abbrevs.append(abbrev)
            if not eligible:
                continue
            table = {id(t): a for t, a in zip(eligible, abbrevs)}
            accuracy = eval_topk(
                predictor,
                eligible,
                k=k,
                abbrev_fn=lambda task: table[id(task)],
            )
            rows.append(
                {
                    "kind": "ae_keywords",
                    "kw_count": kw_count,
                    "nl_limit": nl_limit,
                    "accuracy": accuracy,
                    "n": len(eligible),
                }
            )
    turn_indices = sorted({t.turn_index for t in tasks})
    for use_context in (True, False):
        for turn_index in turn_indices:
            subset = [t for t in tasks if t.turn_index == turn_index]
            acc = eval_topk(predictor, subset, k=k, use_context=use_context)
            rows.append(
                {
                    "kind": "ae_by_turn",
                    "turn_index": turn_index,
                    "context": use_context,
                    "accuracy": acc,
                    "n": len(subset),
                }
            )
    fm = fm_predictor or predictor
    for use_context in (True, False):
        hits: dict[bool, int] = {True: 0, False: 0}
        totals: dict[bool, int] = {True: 0, False: 0}
        rng = random.Random(seed)
        for task in tasks:
            positions = _maskable_positions(task.target)
            if not positions:
                continue
            masked_index = rng.choice(positions)
            word = task.target[masked_index].surface
            # the request must not carry the answer: the masked slot shows
            # only the initial, as in the training format ("s_")
            shown = [t.surface for t in task.target]
            shown[masked_index] = word[0].lower() + "_"
            request = FMRequest(
                context=tuple(task.context) if use_context else (),
                phrase_words=tuple(shown),
                masked_index=masked_index,
                initial=word[0].lower(),
                k=k,
            )
            options = fm.fill_mask(request)
            stop = is_stopword(word)
            totals[stop] += 1
            if any(o.word.lower() == word.lower() for o in options):
                hits[stop] += 1
        for stop in (True, False):
            if totals[stop]:
                rows.append(
                    {
                        "kind": "fm_stop_split",
                        "context": use_context,
                        "stop": stop,
                        "accuracy": hits[stop] / totals[stop],
                        "n": totals[stop],
                    }
                )
    return rows
