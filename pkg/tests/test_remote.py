import json

import httpx
import pytest

from abbrex.abbrev import KeywordSpec, initials_abbrev, keyword_abbrev
from abbrex.corpus import tokenize_phrase
from abbrex.expand import AERequest, FMRequest, PredictorError
from abbrex.remote import (
    RemoteConfig,
    RemotePredictor,
    load_remote_config,
    rank_by_frequency,
    render_ae_prompt,
    render_fm_prompt,
)

ENDPOINT = "http://llm.test/v1/sample"


def make_predictor(handler) -> tuple[RemotePredictor, list[dict]]:
    seen: list[dict] = []

    def wrapped(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        seen.append(body)
        return handler(body)

    client = httpx.Client(transport=httpx.MockTransport(wrapped))
    return RemotePredictor(RemoteConfig(endpoint=ENDPOINT), client), seen


def ae_request(text, k=5, context=()):
    return AERequest(context=tuple(context), abbrev=initials_abbrev(tokenize_phrase(text)), k=k)


class TestSampleCounts:
    def test_long_abbreviation_uses_large_sample_count(self):
        predictor, seen = make_predictor(lambda body: httpx.Response(200, json={"samples": []}))
        predictor.keyword_ae(ae_request("i saw him play in the bedroom"))
        assert seen[0]["num_samples"] == 256

    def test_short_abbreviation_uses_small_sample_count(self):
        predictor, seen = make_predictor(lambda body: httpx.Response(200, json={"samples": []}))
        predictor.keyword_ae(ae_request("ok, sounds good"))  # 3 initials + punct
        assert seen[0]["num_samples"] == 128

    def test_temperatures_and_decode_limits(self):
        predictor, seen = make_predictor(lambda body: httpx.Response(200, json={"samples": []}))
        predictor.keyword_ae(ae_request("ok, sounds good"))
        predictor.fill_mask(
            FMRequest(context=(), phrase_words=("ok", "buddy"), masked_index=1, initial="b", k=5)
        )
        assert seen[0]["temperature"] == 1.0
        assert seen[0]["max_decode_tokens"] == 20
        assert seen[1]["temperature"] == 2.0
        assert seen[1]["max_decode_tokens"] == 6


class TestPrompts:
    def test_ae_prompt_format(self):
        config = RemoteConfig(endpoint=ENDPOINT)
        abbrev = initials_abbrev(tokenize_phrase("i saw him play in the bedroom"))
        prompt = render_ae_prompt(config, ("How was your day?", "Pretty good."), abbrev)
        assert prompt == (
            "context: {How was your day?}{Pretty good.} "
            "shorthand: {i s h p i t b} full:"
        )

    def test_context_window_truncated_to_five_turns(self):
        config = RemoteConfig(endpoint=ENDPOINT)
        abbrev = initials_abbrev(tokenize_phrase("ok"))
        prompt = render_ae_prompt(config, tuple(f"turn {i}" for i in range(8)), abbrev)
        assert "turn 2" not in prompt
        assert prompt.count("{") - 1 == 5  # five context turns plus the shorthand

    def test_fm_prompt_masks_word(self):
        config = RemoteConfig(endpoint=ENDPOINT)
        prompt = render_fm_prompt(
            config,
            ("Been sitting all day.",),
            ("oh", ",", "i'm", "sorry"),
            3,
            "s",
        )
        assert "phrase: {oh, i'm s_}" in prompt
        assert prompt.endswith("word:")


class TestRanking:
    def test_frequency_then_first_occurrence(self):
        ranked = rank_by_frequency(["b", "a", "a", "c", "b", "a"])
        assert ranked == [("a", 3), ("b", 2), ("c", 1)]

    def test_ae_filters_mismatched_and_ranks_by_count(self):
        samples = (
            ["i saw him play in the bedroom"] * 100
            + ["i saw him play in the backyard"] * 28
            + ["something else entirely"] * 50  # fails the abbreviation check
            + ["I saw him  play in the BEDROOM."] * 5  # normalizes into the winner
        )
        predictor, _ = make_predictor(
            lambda body: httpx.Response(200, json={"samples": samples})
        )
        got = predictor.keyword_ae(ae_request("i saw him play in the bedroom", k=5))
        assert [c.text for c in got] == [
            "i saw him play in the bedroom",
            "i saw him play in the backyard",
        ]
        assert got[0].score == 105

    def test_keyword_constraint_enforced(self):
        tokens = tokenize_phrase("i saw him play in the bedroom")
        abbrev = keyword_abbrev(tokens, {6: KeywordSpec("complete")})
        samples = ["i saw him play in the backyard"] * 10 + [
            "i see his pet in the bedroom"
        ] * 2
        predictor, _ = make_predictor(
            lambda body: httpx.Response(200, json={"samples": samples})
        )
        got = predictor.keyword_ae(AERequest(context=(), abbrev=abbrev, k=5))
        assert [c.text for c in got] == ["i see his pet in the bedroom"]

    def test_fm_filters_initial_and_current_word(self):
        samples = ["bedroom"] * 5 + ["backyard"] * 9 + ["garden"] * 20 + ["bed"] * 2
        predictor, _ = make_predictor(
            lambda body: httpx.Response(200, json={"samples": samples})
        )
        got = predictor.fill_mask(
            FMRequest(
                context=(),
                phrase_words=("in", "the", "backyard"),
                masked_index=2,
                initial="b",
                k=5,
            )
        )
        assert [c.word for c in got] == ["bedroom", "bed"]


class TestErrors:
    def test_http_error_raises_typed(self):
        predictor, _ = make_predictor(lambda body: httpx.Response(500, text="boom"))
        with pytest.raises(PredictorError):
            predictor.keyword_ae(ae_request("ok"))

    def test_malformed_response_raises_typed(self):
        predictor, _ = make_predictor(lambda body: httpx.Response(200, json={"nope": 1}))
        with pytest.raises(PredictorError):
            predictor.keyword_ae(ae_request("ok"))

    def test_timeout_raises_typed(self):
        def handler(body):
            raise httpx.ConnectTimeout("slow")

        predictor, _ = make_predictor(handler)
        with pytest.raises(PredictorError):
            predictor.keyword_ae(ae_request("ok"))


class TestConfig:
    def test_file_then_env_precedence(self, tmp_path):
        path = tmp_path / "remote.json"
        path.write_text(json.dumps({"endpoint": "http://file.test", "timeout": 5}))
        config = load_remote_config(path, env={"ABBREX_TIMEOUT": "9.5"})
        assert config.endpoint == "http://file.test"
        assert config.timeout == 9.5

    def test_missing_endpoint_rejected(self):
        with pytest.raises(ValueError):
            load_remote_config(None, env={})

    def test_positive_fields_validated(self):
        with pytest.raises(ValueError):
            RemoteConfig(endpoint=ENDPOINT, samples_small=0)
