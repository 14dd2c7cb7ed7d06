"""Ideal-user simulation of abbreviated phrase entry and the typing baseline.

The simulated user always takes the cheapest correct action on offer: they
type the initials abbreviation, select the wanted phrase the moment it
appears among the top-k candidates, and otherwise recover by spelling
keywords (one whole word per step, or letter by letter, depending on the
expander version) or by replacing near-miss words through same-initial
suggestions. All keypresses and UI clicks count as actions; the final
speak click does not.

Keystroke saving rate for a turn is 1 - N_a / N_c where N_a is the number
of counted actions and N_c the character length of the entered phrase,
spaces included.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .abbrev import (
    Abbreviation,
    AbbrevKind,
    AbbrevToken,
    initials_abbrev,
    normalize_for_match,
    render_compact,
)
from .corpus import PhraseToken, TokenKind, TurnTask, phrase_text, tokenize_phrase
from .expand import (
    AERequest,
    FMRequest,
    PhraseCandidate,
    Predictor,
    PredictorError,
)
from .lm import NgramModel


#: Published reference points for this interaction paradigm, reported
#: alongside results for orientation and never asserted: they were measured
#: with a 64-billion-parameter fine-tuned LLM and a production keyboard's
#: forward prediction, neither of which is reproducible at desk scale.
REFERENCE_KSR = {
    "strategy 1, v2, context, k=5": 0.640,
    "strategy 2, v2, context, k=5": 0.657,
    "strategy 2a, v2, context, k=5": 0.647,
    "best v1 configuration, context, k=5": 0.647,
    "forward prediction baseline": 0.482,
}


class Strategy(Enum):
    S1 = "1"  # keyword spelling only
    S2 = "2"  # word replacement once a single incorrect word remains
    S2A = "2a"  # word replacement once two or fewer incorrect words remain


class AeVersion(Enum):
    V1 = "1"  # keywords must be spelled in full
    V2 = "2"  # keywords may be partially spelled, one letter at a time


class ActionKind(Enum):
    KEYSTROKE = "keystroke"
    SPELL_MODE_CLICK = "spell_mode_click"
    CHIP_CLICK = "chip_click"
    CANDIDATE_CLICK = "candidate_click"
    WORD_OPTION_CLICK = "word_option_click"
    EXPAND_CLICK = "expand_click"  # only with manual expansion enabled
    SPEAK_CLICK = "speak_click"


#: Kinds that count toward N_a. The speak click is excluded by definition.
COUNTED_KINDS = frozenset(k for k in ActionKind if k is not ActionKind.SPEAK_CLICK)


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    payload: str | int | None = None


class SolvedBy(Enum):
    INITIALS_ONLY = "initials_only"
    KEYWORD_AE = "keyword_ae"
    FILL_MASK = "fill_mask"
    FULL_SPELL = "full_spell"
    BASELINE = "baseline"


@dataclass(frozen=True)
class SimConfig:
    strategy: Strategy = Strategy.S1
    ae_version: AeVersion = AeVersion.V2
    k: int = 5
    use_context: bool = True
    max_len: int = 10
    manual_expand: bool = False  # +1 click per expansion call (older UI)
    prefilled_initial: bool = True  # keyword boxes start with the word's initial
    count_select_action: bool = False  # charge the final phrase selection

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class TurnResult:
    task_id: str
    n_actions: int
    n_chars: int
    ksr: float
    llm_calls: int
    solved_by: SolvedBy
    trace: tuple[Action, ...]
    fm_entry_r: int | None = None  # incorrect words when word replacement began


class TurnFailed(RuntimeError):
    def __init__(self, task_id: str, cause: Exception) -> None:
        super().__init__(f"turn {task_id} failed: {cause}")
        self.task_id = task_id
        self.cause = cause


def ksr(n_actions: int, n_chars: int) -> float:
    """Keystroke saving rate: 1 - N_a / N_c."""
    if n_chars < 1:
        raise ValueError(f"N_c must be >= 1, got {n_chars}")
    if n_actions < 0:
        raise ValueError(f"N_a must be >= 0, got {n_actions}")
    return 1.0 - n_actions / n_chars


def count_actions(trace: Iterable[Action]) -> int:
    return sum(1 for action in trace if action.kind in COUNTED_KINDS)


def _word_positions(tokens: Sequence[PhraseToken]) -> list[int]:
    return [i for i, tok in enumerate(tokens) if tok.is_word()]


def _align_candidate(
    cand: PhraseCandidate, target: Sequence[PhraseToken]
) -> tuple[int, list[int]] | None:
    """Aligned comparison of a candidate against the target tokens.

    Returns (matched count, incorrect word positions), or None when the
    candidate cannot be aligned (different token count, or kind/punctuation
    mismatch at some position).
    """
    try:
        tokens = tokenize_phrase(cand.text)
    except Exception:
        return None
    if len(tokens) != len(target):
        return None
    matches = 0
    wrong: list[int] = []
    for i, (got, want) in enumerate(zip(tokens, target)):
        if got.kind is not want.kind:
            return None
        if got.kind is TokenKind.MID_PUNCT:
            if got.surface != want.surface:
                return None
            matches += 1
        elif got.surface.lower() == want.surface.lower():
            matches += 1
        else:
            wrong.append(i)
    return matches, wrong


def _best_match(
    candidates: Sequence[PhraseCandidate], target: Sequence[PhraseToken]
) -> tuple[int, list[int]] | None:
    """Pick the candidate with the most position-aligned word matches.

    Ties go to the higher-ranked candidate. Returns (candidate index,
    incorrect word positions) or None when nothing aligns.
    """
    best: tuple[int, int, list[int]] | None = None  # (matches, -index, wrong)
    for index, cand in enumerate(candidates):
        aligned = _align_candidate(cand, target)
        if aligned is None:
            continue
        matches, wrong = aligned
        if best is None or matches > best[0]:
            best = (matches, index, wrong)
    if best is None:
        return None
    return best[1], best[2]


def simulate_turn(
    task: TurnTask,
    cfg: SimConfig,
    ae: Predictor,
    fm: Predictor | None = None,
) -> TurnResult:
    """Run the ideal-user policy for one phrase-entry turn.

    Terminates for every input: each recovery step spells at least one more
    letter (or completes a word), and a fully spelled phrase is entered
    literally.
    """
    fm = fm or ae
    target = list(task.target)
    target_text = phrase_text(target)
    target_norm = normalize_for_match(target_text)
    n_chars = len(target_text)
    context = tuple(task.context) if cfg.use_context else ()
    word_positions = _word_positions(target)

    trace: list[Action] = []
    llm_calls = 0
    # typed prefix per word position; the initial is pre-filled by the UI
    prefixes: dict[int, str] = {}
    spelled: set[int] = set()
    keyword_used = False
    spell_mode = False
    open_chip: int | None = None
    fm_entry_r: int | None = None

    def current_tokens() -> Abbreviation:
        out: list[AbbrevToken] = []
        for i, tok in enumerate(target):
            if tok.kind is TokenKind.MID_PUNCT:
                out.append(AbbrevToken(AbbrevKind.MID_PUNCT, tok.surface))
            elif i in spelled:
                out.append(AbbrevToken(AbbrevKind.COMPLETE, tok.surface.lower()))
            elif len(prefixes.get(i, "")) >= 2:
                out.append(AbbrevToken(AbbrevKind.INCOMPLETE, prefixes[i]))
            else:
                out.append(AbbrevToken(AbbrevKind.INITIAL, tok.surface[0].lower()))
        return Abbreviation(tuple(out))

    def ae_call() -> list[PhraseCandidate]:
        nonlocal llm_calls
        llm_calls += 1
        if cfg.manual_expand:
            trace.append(Action(ActionKind.EXPAND_CLICK))
        request = AERequest(context=context, abbrev=current_tokens(), k=cfg.k)
        try:
            return ae.keyword_ae(request)
        except PredictorError as exc:
            raise TurnFailed(task.task_id, exc) from exc

    def finish(solved_by: SolvedBy, selected: bool) -> TurnResult:
        if selected and cfg.count_select_action:
            trace.append(Action(ActionKind.CANDIDATE_CLICK, "select"))
        trace.append(Action(ActionKind.SPEAK_CLICK, target_text))
        n_actions = count_actions(trace)
        return TurnResult(
            task_id=task.task_id,
            n_actions=n_actions,
            n_chars=n_chars,
            ksr=ksr(n_actions, n_chars),
            llm_calls=llm_calls,
            solved_by=solved_by,
            trace=tuple(trace),
            fm_entry_r=fm_entry_r,
        )

    def fm_allowed(r: int) -> bool:
        if cfg.strategy is Strategy.S2:
            return r == 1
        if cfg.strategy is Strategy.S2A:
            return 1 <= r <= 2
        return False

    def run_fill_mask(
        candidates: Sequence[PhraseCandidate], cand_index: int, wrong: list[int]
    ) -> TurnResult:
        nonlocal fm_entry_r, llm_calls
        fm_entry_r = len(wrong)
        trace.append(Action(ActionKind.CANDIDATE_CLICK, cand_index))
        phrase = [tok.surface for tok in tokenize_phrase(candidates[cand_index].text)]
        for position in wrong:
            trace.append(Action(ActionKind.CHIP_CLICK, position))
            llm_calls += 1
            request = FMRequest(
                context=context,
                phrase_words=tuple(phrase),
                masked_index=position,
                initial=phrase[position][0].lower(),
                k=cfg.k,
            )
            try:
                options = fm.fill_mask(request)
            except PredictorError as exc:
                raise TurnFailed(task.task_id, exc) from exc
            wanted = target[position].surface.lower()
            hit = next(
                (i for i, opt in enumerate(options) if opt.word.lower() == wanted), None
            )
            if hit is not None:
                trace.append(Action(ActionKind.WORD_OPTION_CLICK, hit))
            else:
                for ch in target[position].surface:  # typed into an empty box
                    trace.append(Action(ActionKind.KEYSTROKE, ch))
            phrase[position] = target[position].surface
        return finish(SolvedBy.FILL_MASK, selected=False)

    # enter the initials abbreviation; per-keystroke calls collapse into one
    for ch in render_compact(initials_abbrev(target)):
        trace.append(Action(ActionKind.KEYSTROKE, ch))
    candidates = ae_call()

    while True:
        if any(normalize_for_match(c.text) == target_norm for c in candidates):
            solved = SolvedBy.KEYWORD_AE if keyword_used else SolvedBy.INITIALS_ONLY
            return finish(solved, selected=True)
        if all(p in spelled for p in word_positions):
            return finish(SolvedBy.FULL_SPELL, selected=False)  # entered literally

        best = _best_match(candidates, target)
        if best is not None:
            cand_index, wrong = best
            if wrong and fm_allowed(len(wrong)):
                return run_fill_mask(candidates, cand_index, wrong)
            focus_pool = [p for p in wrong if p not in spelled]
        else:
            focus_pool = []
        if not focus_pool:
            focus_pool = [p for p in word_positions if p not in spelled]
        position = focus_pool[0]

        # keyword spelling (fully for v1, one letter at a time for v2)
        keyword_used = True
        if not spell_mode:
            trace.append(Action(ActionKind.SPELL_MODE_CLICK))
            spell_mode = True
        if open_chip != position:
            trace.append(Action(ActionKind.CHIP_CLICK, position))
            open_chip = position
        word = target[position].surface.lower()
        prefix = prefixes.get(position)
        if prefix is None:
            prefix = word[0] if cfg.prefilled_initial else ""
            prefixes[position] = prefix
        if cfg.ae_version is AeVersion.V1:
            for ch in word[len(prefix) :]:
                trace.append(Action(ActionKind.KEYSTROKE, ch))
            prefixes[position] = word
        else:
            if len(prefix) < len(word):
                trace.append(Action(ActionKind.KEYSTROKE, word[len(prefix)]))
                prefixes[position] = word[: len(prefix) + 1]
        if prefixes[position] == word:
            spelled.add(position)
        candidates = ae_call()


def simulate_forward_baseline(task: TurnTask, model: NgramModel, k: int) -> TurnResult:
    """Conventional word completion / next-word prediction typing.

    The ideal user checks the top-k completions of the current word prefix
    before every keystroke (an empty prefix means next-word prediction) and
    selects the intended word as soon as it appears; a selection commits
    the word plus its trailing space. With k=0 every character is typed.
    """
    target = list(task.target)
    text = phrase_text(target)
    n_chars = len(text)
    trace: list[Action] = []
    committed: list[str] = []

    for index, tok in enumerate(target):
        next_tok = target[index + 1] if index + 1 < len(target) else None
        separator = " " if next_tok is not None and next_tok.is_word() else ""
        if tok.kind is TokenKind.MID_PUNCT:
            trace.append(Action(ActionKind.KEYSTROKE, tok.surface))
            committed.append(tok.surface)
            for ch in separator:
                trace.append(Action(ActionKind.KEYSTROKE, ch))
            continue
        word = tok.surface.lower()
        prefix = ""
        selected = False
        while prefix != word:
            if k >= 1 and word in model.completions(prefix, tuple(committed), k):
                trace.append(Action(ActionKind.CANDIDATE_CLICK, word))
                selected = True
                break
            ch = word[len(prefix)]
            prefix += ch
            trace.append(Action(ActionKind.KEYSTROKE, ch))
        committed.append(word)
        if not selected:  # selection auto-enters the trailing space
            for ch in separator:
                trace.append(Action(ActionKind.KEYSTROKE, ch))

    n_actions = count_actions(trace)
    return TurnResult(
        task_id=task.task_id,
        n_actions=n_actions,
        n_chars=n_chars,
        ksr=ksr(n_actions, n_chars),
        llm_calls=0,
        solved_by=SolvedBy.BASELINE,
        trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# corpus-level runs


@dataclass
class AggregateRow:
    strategy: str
    ae_version: str
    k: int
    use_context: bool
    turns: int
    mean_ksr: float
    single_call_fraction: float
    solved_by_counts: dict[str, int]
    mean_llm_calls: float


def _turn_row(row_cfg: dict, result: TurnResult) -> dict:
    return {
        "task_id": result.task_id,
        "strategy": row_cfg.get("strategy"),
        "ae_version": row_cfg.get("ae_version"),
        "k": row_cfg.get("k"),
        "context": row_cfg.get("context"),
        "n_actions": result.n_actions,
        "n_chars": result.n_chars,
        "ksr": result.ksr,
        "llm_calls": result.llm_calls,
        "solved_by": result.solved_by.value,
    }


@dataclass
class SweepReport:
    config: dict
    results: list[TurnResult] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    def to_json(self) -> str:
        obj = {
            "config": self.config,
            "reference_ksr": REFERENCE_KSR,
            "aggregates": [
                {
                    "strategy": a.strategy,
                    "ae_version": a.ae_version,
                    "k": a.k,
                    "context": a.use_context,
                    "turns": a.turns,
                    "mean_ksr": a.mean_ksr,
                    "single_call_fraction": a.single_call_fraction,
                    "solved_by": a.solved_by_counts,
                    "mean_llm_calls": a.mean_llm_calls,
                }
                for a in self.aggregates
            ],
            "turns": self.rows,
            "failures": [{"task_id": t, "error": e} for t, e in self.failures],
        }
        return json.dumps(obj, sort_keys=True, indent=2)

    CSV_COLUMNS = [
        "task_id",
        "strategy",
        "ae_version",
        "k",
        "context",
        "n_actions",
        "n_chars",
        "ksr",
        "llm_calls",
        "solved_by",
    ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(self.CSV_COLUMNS)
        for row in self.rows:
            out = dict(row)
            out["ksr"] = f"{row['ksr']:.6f}"
            writer.writerow([out[col] for col in self.CSV_COLUMNS])
        return buf.getvalue()

    def traces_jsonl(self) -> str:
        lines = []
        for r in self.results:
            for action in r.trace:
                lines.append(
                    json.dumps(
                        {"task_id": r.task_id, "kind": action.kind.value, "payload": action.payload},
                        sort_keys=True,
                    )
                )
        return "\n".join(lines) + "\n"


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _aggregate(cfg: SimConfig, results: Sequence[TurnResult]) -> AggregateRow:
    counts: dict[str, int] = {}
    for r in results:
        counts[r.solved_by.value] = counts.get(r.solved_by.value, 0) + 1
    singles = sum(
        1
        for r in results
        if r.solved_by is SolvedBy.INITIALS_ONLY and r.llm_calls == 1
    )
    return AggregateRow(
        strategy=cfg.strategy.value,
        ae_version=cfg.ae_version.value,
        k=cfg.k,
        use_context=cfg.use_context,
        turns=len(results),
        mean_ksr=_mean([r.ksr for r in results]),
        single_call_fraction=singles / len(results) if results else 0.0,
        solved_by_counts=counts,
        mean_llm_calls=_mean([float(r.llm_calls) for r in results]),
    )


def _run_tasks(
    tasks: Sequence[TurnTask],
    runner: Callable[[TurnTask], TurnResult],
    workers: int,
) -> tuple[list[TurnResult], list[tuple[str, str]]]:
    def run_one(task: TurnTask) -> tuple[str, TurnResult | None, str | None]:
        try:
            return task.task_id, runner(task), None
        except TurnFailed as exc:
            return task.task_id, None, str(exc.cause)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, tasks))  # input order preserved
    else:
        outcomes = [run_one(task) for task in tasks]
    results: list[TurnResult] = []
    failures: list[tuple[str, str]] = []
    for task_id, result, error in outcomes:
        if result is not None:
            results.append(result)
        else:
            failures.append((task_id, error or "unknown error"))
            print(f"warning: turn {task_id} failed: {error}", file=sys.stderr)
    return results, failures


def simulate_corpus(
    tasks: Sequence[TurnTask],
    cfg: SimConfig,
    ae: Predictor,
    fm: Predictor | None = None,
    workers: int = 1,
) -> SweepReport:
    """Simulate every task and aggregate mean KSR, single-call fraction,
    and the distribution of how turns were solved."""
    eligible = [t for t in tasks if len(t.target) <= cfg.max_len]
    runner = lambda task: simulate_turn(task, cfg, ae, fm)
    results, failures = _run_tasks(eligible, runner, workers)
    row_cfg = {
        "strategy": cfg.strategy.value,
        "ae_version": cfg.ae_version.value,
        "k": cfg.k,
        "context": cfg.use_context,
        "max_len": cfg.max_len,
    }
    report = SweepReport(
        config=row_cfg,
        results=results,
        rows=[_turn_row(row_cfg, r) for r in results],
        failures=failures,
    )
    report.aggregates.append(_aggregate(cfg, results))
    return report


def simulate_baseline_corpus(
    tasks: Sequence[TurnTask],
    model: NgramModel,
    k: int,
    max_len: int = 10,
    workers: int = 1,
) -> SweepReport:
    eligible = [t for t in tasks if len(t.target) <= max_len]
    runner = lambda task: simulate_forward_baseline(task, model, k)
    results, failures = _run_tasks(eligible, runner, workers)
    row_cfg = {"strategy": "baseline", "ae_version": "", "k": k, "context": False, "max_len": max_len}
    report = SweepReport(
        config=row_cfg,
        results=results,
        rows=[_turn_row(row_cfg, r) for r in results],
        failures=failures,
    )
    counts: dict[str, int] = {"baseline": len(results)}
    report.aggregates.append(
        AggregateRow(
            strategy="baseline",
            ae_version="",
            k=k,
            use_context=False,
            turns=len(results),
            mean_ksr=_mean([r.ksr for r in results]),
            single_call_fraction=0.0,
            solved_by_counts=counts,
            mean_llm_calls=0.0,
        )
    )
    return report


def sweep_options(
    tasks: Sequence[TurnTask],
    cfg: SimConfig,
    ae: Predictor,
    fm: Predictor | None = None,
    k_values: Sequence[int] = tuple(range(1, 11)),
    workers: int = 1,
) -> SweepReport:
    """Re-run the corpus at each option count; one aggregate row per k."""
    combined = SweepReport(
        config={
            "strategy": cfg.strategy.value,
            "ae_version": cfg.ae_version.value,
            "k": list(k_values),
            "context": cfg.use_context,
            "max_len": cfg.max_len,
        }
    )
    for k in k_values:
        report = simulate_corpus(tasks, replace(cfg, k=k), ae, fm, workers=workers)
        combined.results.extend(report.results)
        combined.rows.extend(report.rows)
        combined.aggregates.extend(report.aggregates)
        combined.failures.extend(report.failures)
    return combined
