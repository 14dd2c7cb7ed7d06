"""Dialogue corpus ingestion, phrase tokenization, and task extraction.

A corpus is a list of two-speaker dialogues. Each turn's text is tokenized
into words and mid-sentence punctuation; sentence-final punctuation is
dropped. Simulation/evaluation tasks pair a turn's tokenized phrase with
all the preceding turns of its dialogue as context.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

MID_PUNCT = frozenset({",", ";", ":"})
FINAL_PUNCT = frozenset({".", "!", "?"})

# Words start with a letter or digit; apostrophes and hyphens may occur
# inside ("you're", "mother-in-law").
_WORD_RE = re.compile(r"[^\W_]['\-\w]*", re.UNICODE)
_TOKEN_RE = re.compile(r"[^\W_]['\-\w]*|[^\w\s]", re.UNICODE)
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})


class CorpusError(ValueError):
    """Raised for unusable corpus input (empty file, untokenizable text)."""


class TokenKind(Enum):
    WORD = "word"
    MID_PUNCT = "punct"


@dataclass(frozen=True)
class PhraseToken:
    kind: TokenKind
    surface: str

    def is_word(self) -> bool:
        return self.kind is TokenKind.WORD


@dataclass(frozen=True)
class Turn:
    speaker: int  # 0 or 1, strictly alternating within a dialogue
    text: str


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Turn, ...]


@dataclass(frozen=True)
class TurnTask:
    """One phrase-entry task: a target turn plus its preceding turns."""

    dialogue_id: str
    turn_index: int
    context: tuple[str, ...]
    target: tuple[PhraseToken, ...]

    @property
    def task_id(self) -> str:
        return f"{self.dialogue_id}:{self.turn_index}"

    @property
    def target_text(self) -> str:
        return phrase_text(self.target)


def normalize_text(text: str) -> str:
    """NFC-fold, unify apostrophe variants, and collapse whitespace runs."""
    folded = unicodedata.normalize("NFC", text).translate(_APOSTROPHES)
    return " ".join(folded.split())


def tokenize_phrase(text: str) -> list[PhraseToken]:
    """Split a phrase into Word and MidPunct tokens.

    Mid-sentence punctuation (and sentence-final marks appearing mid-phrase,
    as in multi-sentence turns) is preserved; the trailing run of
    sentence-final punctuation is dropped, as is any punctuation outside the
    recognized sets. Contractions and hyphenated words stay single tokens.
    """
    normalized = normalize_text(text)
    raw: list[PhraseToken] = []
    for piece in _TOKEN_RE.findall(normalized):
        if _WORD_RE.fullmatch(piece):
            raw.append(PhraseToken(TokenKind.WORD, piece))
        elif piece in MID_PUNCT or piece in FINAL_PUNCT:
            if raw:  # punctuation must attach to a preceding word
                raw.append(PhraseToken(TokenKind.MID_PUNCT, piece))
        # anything else (quotes, dashes, emoji) is dropped
    while raw and raw[-1].kind is TokenKind.MID_PUNCT and raw[-1].surface in FINAL_PUNCT:
        raw.pop()
    if not any(tok.is_word() for tok in raw):
        raise CorpusError(f"no word characters in phrase: {text!r}")
    return raw


def phrase_text(tokens: Sequence[PhraseToken]) -> str:
    """Re-join tokens: single spaces between words, punctuation attached."""
    parts: list[str] = []
    for tok in tokens:
        if tok.kind is TokenKind.MID_PUNCT and parts:
            parts[-1] += tok.surface
        else:
            parts.append(tok.surface)
    return " ".join(parts)


def phrase_length(tokens: Sequence[PhraseToken]) -> int:
    """Phrase length counts words and mid-sentence punctuation alike."""
    return len(tokens)


_ID_LINE_RE = re.compile(r"^\S*_\S*$")


@dataclass
class ParsedCorpus:
    dialogues: list[Dialogue]
    warnings: list[str]


def parse_turk_dialogues(raw: str, expected_turns: int | None = 6) -> ParsedCorpus:
    """Parse a raw dialogue corpus blob.

    Two layouts are accepted and detected automatically: tab-separated
    single-line records (``id TAB turn1 TAB ... TAB turnN``) and block
    records (an id line followed by one turn per line, records separated by
    blank lines or the next id-like line). Records with the wrong turn
    count are skipped with a warning.
    """
    if not raw.strip():
        raise CorpusError("no dialogues in input")
    lines = raw.splitlines()
    if any("\t" in line for line in lines if line.strip()):
        records = _parse_tab_records(lines)
    else:
        records = _parse_block_records(lines)

    dialogues: list[Dialogue] = []
    warnings: list[str] = []
    seen: set[str] = set()
    for rec_id, turn_texts in records:
        if not rec_id:
            warnings.append("record with empty id skipped")
            continue
        if rec_id in seen:
            warnings.append(f"duplicate dialogue id {rec_id!r} skipped")
            continue
        want = expected_turns
        if want is not None and len(turn_texts) != want:
            warnings.append(
                f"dialogue {rec_id!r} has {len(turn_texts)} turns, expected {want}; skipped"
            )
            continue
        if want is None and len(turn_texts) < 2:
            warnings.append(f"dialogue {rec_id!r} has fewer than 2 turns; skipped")
            continue
        cleaned = [normalize_text(t) for t in turn_texts]
        if any(not t for t in cleaned):
            warnings.append(f"dialogue {rec_id!r} has an empty turn; skipped")
            continue
        seen.add(rec_id)
        turns = tuple(Turn(speaker=i % 2, text=t) for i, t in enumerate(cleaned))
        dialogues.append(Dialogue(id=rec_id, turns=turns))
    if not dialogues:
        raise CorpusError("no dialogues parsed from input")
    return ParsedCorpus(dialogues, warnings)


def _parse_tab_records(lines: Iterable[str]) -> list[tuple[str, list[str]]]:
    records = []
    for line in lines:
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("\t")]
        records.append((fields[0], [f for f in fields[1:] if f]))
    return records


def _parse_block_records(lines: Iterable[str]) -> list[tuple[str, list[str]]]:
    records: list[tuple[str, list[str]]] = []
    rec_id: str | None = None
    turns: list[str] = []

    def flush() -> None:
        nonlocal rec_id, turns
        if rec_id is not None:
            records.append((rec_id, turns))
        rec_id, turns = None, []

    for line in lines:
        stripped = line.strip()
        if not stripped:
            flush()
        elif rec_id is None:
            rec_id = stripped
        elif _ID_LINE_RE.match(stripped):
            flush()
            rec_id = stripped
        else:
            turns.append(stripped)
    flush()
    return records


def make_tasks(
    dialogues: Iterable[Dialogue],
    role_filter: int | None = None,
    max_len: int = 10,
) -> list[TurnTask]:
    """Build one task per eligible turn.

    A turn is eligible when its speaker matches ``role_filter`` (if given)
    and its phrase length (words plus mid-sentence punctuation) does not
    exceed ``max_len``. Context holds all preceding turn texts verbatim.
    """
    tasks: list[TurnTask] = []
    for dialogue in dialogues:
        for index, turn in enumerate(dialogue.turns):
            if role_filter is not None and turn.speaker != role_filter:
                continue
            try:
                tokens = tokenize_phrase(turn.text)
            except CorpusError:
                continue
            if phrase_length(tokens) > max_len:
                continue
            context = tuple(t.text for t in dialogue.turns[:index])
            tasks.append(
                TurnTask(
                    dialogue_id=dialogue.id,
                    turn_index=index,
                    context=context,
                    target=tuple(tokens),
                )
            )
    return tasks


# ---------------------------------------------------------------------------
# Canonical JSONL storage: one dialogue per line, {id, turns:[{speaker,text}]}


def dialogues_to_jsonl(dialogues: Iterable[Dialogue]) -> str:
    lines = []
    for d in dialogues:
        obj = {"id": d.id, "turns": [{"speaker": t.speaker, "text": t.text} for t in d.turns]}
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + "\n"


def dialogues_from_jsonl(text: str) -> list[Dialogue]:
    dialogues = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        turns = tuple(Turn(speaker=t["speaker"], text=t["text"]) for t in obj["turns"])
        dialogues.append(Dialogue(id=obj["id"], turns=turns))
    if not dialogues:
        raise CorpusError("no dialogues in JSONL input")
    return dialogues


def load_dialogues(path: str | Path) -> list[Dialogue]:
    return dialogues_from_jsonl(Path(path).read_text(encoding="utf-8"))


def save_dialogues(dialogues: Iterable[Dialogue], path: str | Path) -> None:
    Path(path).write_text(dialogues_to_jsonl(dialogues), encoding="utf-8")


def tasks_to_jsonl(tasks: Iterable[TurnTask]) -> str:
    lines = []
    for task in tasks:
        obj = {
            "task_id": task.task_id,
            "dialogue_id": task.dialogue_id,
            "turn_index": task.turn_index,
            "context": list(task.context),
            "target": task.target_text,
        }
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + "\n"


def tasks_from_jsonl(text: str) -> list[TurnTask]:
    tasks = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        tasks.append(
            TurnTask(
                dialogue_id=obj["dialogue_id"],
                turn_index=obj["turn_index"],
                context=tuple(obj["context"]),
                target=tuple(tokenize_phrase(obj["target"])),
            )
        )
    return tasks
