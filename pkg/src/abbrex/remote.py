"""Remote LLM backend speaking a small HTTP+JSON sampling protocol.

Wire protocol (documented in the README so any LLM server can adapt):
POST ``endpoint`` with body ``{"prompt": str, "num_samples": int,
"temperature": float, "max_decode_tokens": int}``; the response is
``{"samples": [str, ...]}``. Samples are normalized, filtered against the
request's abbreviation (or initial letter), and ranked by how often they
were sampled, ties broken by first occurrence.
"""

from __future__ import annotations

import json
import os
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import httpx

from .abbrev import matches_abbreviation, normalize_for_match, render_spaced
from .corpus import CorpusError, tokenize_phrase
from .expand import (
    AERequest,
    FMRequest,
    PhraseCandidate,
    PredictorError,
    WordCandidate,
)


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str
    ae_temperature: float = 1.0
    fm_temperature: float = 2.0
    samples_small: int = 128
    samples_large: int = 256
    small_threshold: int = 5
    max_context_turns: int = 5
    ae_max_decode_tokens: int = 20
    fm_max_decode_tokens: int = 6
    timeout: float = 30.0
    max_in_flight: int = 4
    context_label: str = "context:"
    shorthand_label: str = "shorthand:"
    full_label: str = "full:"
    phrase_label: str = "phrase:"
    word_label: str = "word:"

    def __post_init__(self) -> None:
        numeric = {
            "ae_temperature": self.ae_temperature,
            "fm_temperature": self.fm_temperature,
            "samples_small": self.samples_small,
            "samples_large": self.samples_large,
            "small_threshold": self.small_threshold,
            "max_context_turns": self.max_context_turns,
            "ae_max_decode_tokens": self.ae_max_decode_tokens,
            "fm_max_decode_tokens": self.fm_max_decode_tokens,
            "timeout": self.timeout,
            "max_in_flight": self.max_in_flight,
        }
        for name, value in numeric.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


ENV_PREFIX = "ABBREX_"

_ENV_FIELDS = {
    "ENDPOINT": ("endpoint", str),
    "AE_TEMPERATURE": ("ae_temperature", float),
    "FM_TEMPERATURE": ("fm_temperature", float),
    "SAMPLES_SMALL": ("samples_small", int),
    "SAMPLES_LARGE": ("samples_large", int),
    "SMALL_THRESHOLD": ("small_threshold", int),
    "MAX_CONTEXT_TURNS": ("max_context_turns", int),
    "AE_MAX_DECODE_TOKENS": ("ae_max_decode_tokens", int),
    "FM_MAX_DECODE_TOKENS": ("fm_max_decode_tokens", int),
    "TIMEOUT": ("timeout", float),
    "MAX_IN_FLIGHT": ("max_in_flight", int),
}


def load_remote_config(
    path: str | Path | None = None, env: dict[str, str] | None = None
) -> RemoteConfig:
    """Build a config from an optional JSON file plus environment overrides.

    Environment variables use the ``ABBREX_`` prefix (``ABBREX_ENDPOINT``,
    ``ABBREX_TIMEOUT``, ...) and take precedence over the file.
    """
    values: dict = {}
    if path is not None:
        values.update(json.loads(Path(path).read_text(encoding="utf-8")))
    env = os.environ if env is None else env
    for suffix, (field_name, cast) in _ENV_FIELDS.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw is not None:
            values[field_name] = cast(raw)
    if "endpoint" not in values:
        raise ValueError("remote endpoint not configured (ABBREX_ENDPOINT or config file)")
    return RemoteConfig(**values)


def render_context(turns: Sequence[str]) -> str:
    return "".join("{" + t + "}" for t in turns)


def render_ae_prompt(config: RemoteConfig, context: Sequence[str], abbrev) -> str:
    turns = list(context)[-config.max_context_turns :]
    return (
        f"{config.context_label} {render_context(turns)} "
        f"{config.shorthand_label} {{{render_spaced(abbrev)}}} "
        f"{config.full_label}"
    )


def render_fm_prompt(
    config: RemoteConfig,
    context: Sequence[str],
    phrase_words: Sequence[str],
    masked_index: int,
    initial: str,
) -> str:
    turns = list(context)[-config.max_context_turns :]
    masked = list(phrase_words)
    masked[masked_index] = initial + "_"
    shown = _attach_punct(masked)
    return (
        f"{config.context_label} {render_context(turns)} "
        f"{config.phrase_label} {{{shown}}} "
        f"{config.word_label}"
    )


def _attach_punct(surfaces: Sequence[str]) -> str:
    parts: list[str] = []
    for s in surfaces:
        if len(s) == 1 and not s.isalnum() and parts:
            parts[-1] += s
        else:
            parts.append(s)
    return " ".join(parts)


def rank_by_frequency(samples: Sequence[str]) -> list[tuple[str, int]]:
    """Distinct samples ranked by count, ties by first occurrence."""
    counts = Counter(samples)
    first_seen: dict[str, int] = {}
    for i, s in enumerate(samples):
        first_seen.setdefault(s, i)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], first_seen[kv[0]]))
    return ordered


class RemotePredictor:
    """Predictor delegating to a sampling LLM server."""

    def __init__(self, config: RemoteConfig, client: httpx.Client | None = None) -> None:
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def close(self) -> None:
        self._client.close()

    def _sample(self, prompt: str, num_samples: int, temperature: float, max_tokens: int) -> list[str]:
        body = {
            "prompt": prompt,
            "num_samples": num_samples,
            "temperature": temperature,
            "max_decode_tokens": max_tokens,
        }
        try:
            with self._gate:
                response = self._client.post(self.config.endpoint, json=body)
            response.raise_for_status()
            payload = response.json()
        except httpx.TimeoutException as exc:
            raise PredictorError(f"remote backend timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise PredictorError(f"remote backend failed: {exc}") from exc
        except ValueError as exc:
            raise PredictorError(f"remote backend returned invalid JSON: {exc}") from exc
        samples = payload.get("samples") if isinstance(payload, dict) else None
        if not isinstance(samples, list) or not all(isinstance(s, str) for s in samples):
            raise PredictorError("remote backend response missing 'samples' list")
        return samples

    def num_samples_for(self, request: AERequest) -> int:
        units = request.abbrev.unit_count()
        if units <= self.config.small_threshold:
            return self.config.samples_small
        return self.config.samples_large

    def keyword_ae(self, request: AERequest) -> list[PhraseCandidate]:
        prompt = render_ae_prompt(self.config, request.context, request.abbrev)
        samples = self._sample(
            prompt,
            self.num_samples_for(request),
            self.config.ae_temperature,
            self.config.ae_max_decode_tokens,
        )
        normalized = []
        for sample in samples:
            text = normalize_for_match(sample)
            if not text:
                continue
            try:
                tokens = tokenize_phrase(text)
            except CorpusError:
                continue
            if matches_abbreviation(tokens, request.abbrev):
                normalized.append(text)
        ranked = rank_by_frequency(normalized)
        return [
            PhraseCandidate(text=text, score=float(count))
            for text, count in ranked[: request.k]
        ]

    def fill_mask(self, request: FMRequest) -> list[WordCandidate]:
        prompt = render_fm_prompt(
            self.config,
            request.context,
            request.phrase_words,
            request.masked_index,
            request.initial,
        )
        samples = self._sample(
            prompt,
            self.config.samples_small,
            self.config.fm_temperature,
            self.config.fm_max_decode_tokens,
        )
        current = request.phrase_words[request.masked_index].lower()
        cleaned = []
        for sample in samples:
            word = normalize_for_match(sample).strip("{}").strip()
            if not word or " " in word:
                continue
            if word == current:
                continue  # the slot already shows this word; alternatives wanted
            if word[0] != request.initial.lower():
                continue
            cleaned.append(word)
        ranked = rank_by_frequency(cleaned)
        return [
            WordCandidate(word=word, score=float(count))
            for word, count in ranked[: request.k]
        ]
