import random

import pytest

from abbrex.abbrev import (
    AbbrevKind,
    Abbreviation,
    AbbrevToken,
    KeywordSpec,
    initials_abbrev,
    keyword_abbrev,
    matches_abbreviation,
)
from abbrex.corpus import tokenize_phrase
from abbrex.expand import (
    AERequest,
    ExhaustiveCapError,
    FMRequest,
    NgramPredictor,
    OraclePredictor,
    ScriptedPredictor,
    beam_expand,
    exhaustive_expand,
    ngram_fill_mask,
    total_fanout,
    validate_candidates,
)
from abbrex.lm import train

TOY_SENTENCES = [
    "i saw him play in the bedroom",
    "i saw him play in the backyard",
    "i saw her read in the garden",
    "he was in the bedroom",
    "the backyard is sunny",
]


@pytest.fixture()
def toy_model():
    return train([tokenize_to_words(s) for s in TOY_SENTENCES], order=3)


def tokenize_to_words(text):
    return [t.surface for t in tokenize_phrase(text)]


def request_for(text, k=5, context=()):
    return AERequest(context=tuple(context), abbrev=initials_abbrev(tokenize_phrase(text)), k=k)


class TestBeam:
    def test_toy_expansion_contains_both_rooms(self, toy_model):
        got = beam_expand(toy_model, request_for("i saw him play in the bedroom"))
        texts = [c.text for c in got]
        assert "i saw him play in the bedroom" in texts
        assert "i saw him play in the backyard" in texts

    def test_complete_keyword_pins_last_word(self, toy_model):
        tokens = tokenize_phrase("i saw him play in the bedroom")
        abbrev = keyword_abbrev(tokens, {6: KeywordSpec("complete")})
        got = beam_expand(toy_model, AERequest(context=(), abbrev=abbrev, k=5))
        assert got and all(c.text.endswith("bedroom") for c in got)

    def test_k_one_truncates(self, toy_model):
        got = beam_expand(toy_model, request_for("i saw him play in the bedroom", k=1))
        assert len(got) == 1

    def test_oov_initial_yields_empty(self, toy_model):
        got = beam_expand(toy_model, request_for("i saw x"))
        assert got == []

    def test_exact_slot_fanout_one(self, toy_model):
        tokens = tokenize_phrase("the bedroom")
        abbrev = keyword_abbrev(tokens, {1: KeywordSpec("complete")})
        initials_only = Abbreviation((abbrev.tokens[0],))
        assert total_fanout(toy_model, abbrev) == total_fanout(toy_model, initials_only)

    def test_candidates_always_match_abbreviation(self, toy_model):
        for text in TOY_SENTENCES:
            request = request_for(text)
            got = beam_expand(toy_model, request)
            assert validate_candidates(request, got) == []


class TestExhaustive:
    def test_counts_product_of_fanouts(self, toy_model):
        # slots: initial 't' and initial 'b' on the toy vocabulary
        request = request_for("the bedroom", k=100)
        fanout = total_fanout(toy_model, request.abbrev)
        got = exhaustive_expand(toy_model, request)
        assert len(got) == fanout

    def test_cap_refusal(self, toy_model):
        request = request_for("i saw him play in the bedroom")
        with pytest.raises(ExhaustiveCapError):
            exhaustive_expand(toy_model, request, cap=2)

    def test_matches_beam_on_toy(self, toy_model):
        request = request_for("i saw him play in the bedroom", k=10)
        width = total_fanout(toy_model, request.abbrev)
        assert beam_expand(toy_model, request, beam_width=width) == exhaustive_expand(
            toy_model, request
        )


WORDS = [
    "apple", "anchor", "bed", "bedroom", "backyard", "bird", "cat", "corn",
    "dog", "door", "egg", "end", "fog", "fox", "gap", "goat", "hat", "hill",
    "ink", "iron", "jam", "jet", "kit", "kite", "lab", "log", "map", "moon",
    "net", "nose", "oak", "owl", "pan", "pond", "quilt", "rat", "rock",
    "sand", "sun", "tap", "tree", "urn", "van", "vine", "wall", "web",
]


def random_instance(rng):
    vocab_size = rng.randint(8, 40)
    vocab = rng.sample(WORDS, min(vocab_size, len(WORDS)))
    sentences = []
    for _ in range(rng.randint(5, 40)):
        length = rng.randint(1, 6)
        sentences.append([rng.choice(vocab) for _ in range(length)])
    model = train(sentences, order=rng.choice([1, 2, 3]))
    slots = rng.randint(1, 5)
    tokens = []
    for _ in range(slots):
        word = rng.choice(sorted(model.vocab))
        kind = rng.choice(["initial", "complete", "prefix", "consonant"])
        if kind == "initial":
            tokens.append(AbbrevToken(AbbrevKind.INITIAL, word[0]))
        elif kind == "complete":
            tokens.append(AbbrevToken(AbbrevKind.COMPLETE, word))
        elif kind == "prefix" and len(word) > 2:
            tokens.append(AbbrevToken(AbbrevKind.INCOMPLETE, word[:2]))
        else:
            tokens.append(AbbrevToken(AbbrevKind.INITIAL, word[0]))
    context = ()
    if rng.random() < 0.5:
        context = (" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 5))),)
    return model, AERequest(context=context, abbrev=Abbreviation(tuple(tokens)), k=rng.randint(1, 8))


def test_oracle_equivalence_randomized():
    rng = random.Random(1729)
    checked = 0
    for _ in range(120):
        model, request = random_instance(rng)
        width = total_fanout(model, request.abbrev)
        if width == 0 or width > 20000:
            continue
        beam = beam_expand(model, request, beam_width=max(width, request.k))
        exact = exhaustive_expand(model, request)
        assert beam == exact
        checked += 1
    assert checked >= 100


class TestFillMask:
    def test_same_initial_and_ranked(self, toy_model):
        request = FMRequest(
            context=("i saw him play in the bedroom",),
            phrase_words=tuple("i saw him play in the backyard".split()),
            masked_index=6,
            initial="b",
            k=5,
        )
        got = ngram_fill_mask(toy_model, request)
        assert got
        assert all(c.word.startswith("b") for c in got)
        assert "bedroom" in [c.word for c in got]
        assert "backyard" not in [c.word for c in got]  # the slot's own word

    def test_right_neighbor_informs_score(self, toy_model):
        request = FMRequest(
            context=(),
            phrase_words=("he", "was", "in", "the", "backyard"),
            masked_index=4,
            initial="b",
            k=2,
        )
        got = ngram_fill_mask(toy_model, request)
        assert got[0].word == "bedroom"

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            FMRequest(context=(), phrase_words=("bed",), masked_index=0, initial="b", k=0)

    def test_masked_index_range(self):
        with pytest.raises(ValueError):
            FMRequest(context=(), phrase_words=("bed",), masked_index=1, initial="b", k=1)

    def test_initial_must_match_masked_word(self):
        with pytest.raises(ValueError):
            FMRequest(context=(), phrase_words=("bed",), masked_index=0, initial="x", k=1)


class TestScripted:
    def test_returns_fixture_verbatim(self):
        predictor = ScriptedPredictor({"ab": ["alpha beta", "all bets"]})
        tokens = tokenize_phrase("alpha beta")
        got = predictor.keyword_ae(AERequest(context=(), abbrev=initials_abbrev(tokens), k=5))
        assert [c.text for c in got] == ["alpha beta", "all bets"]

    def test_unknown_key_empty(self):
        predictor = ScriptedPredictor({})
        tokens = tokenize_phrase("alpha beta")
        assert predictor.keyword_ae(AERequest(context=(), abbrev=initials_abbrev(tokens), k=5)) == []

    def test_k_truncation(self):
        predictor = ScriptedPredictor({"ab": ["a b", "a c", "a d"]})
        tokens = tokenize_phrase("alpha beta")
        got = predictor.keyword_ae(AERequest(context=(), abbrev=initials_abbrev(tokens), k=2))
        assert len(got) == 2

    def test_fm_fixture(self):
        predictor = ScriptedPredictor(
            fm_fixtures={("a b", 1): ["bird", "bed"]}
        )
        request = FMRequest(context=(), phrase_words=("a", "b"), masked_index=1, initial="b", k=1)
        assert [c.word for c in predictor.fill_mask(request)] == ["bird"]


class TestNgramPredictor:
    def test_keyword_ae_contract(self, toy_model):
        predictor = NgramPredictor(toy_model)
        request = request_for("i saw him play in the bedroom")
        got = predictor.keyword_ae(request)
        assert len(got) <= request.k
        assert validate_candidates(request, got) == []
        assert got == sorted(got, key=lambda c: -c.score)


def test_oracle_predictor_roundtrip(test_tasks):
    oracle = OraclePredictor.from_tasks(test_tasks[:50])
    task = test_tasks[0]
    request = AERequest(
        context=tuple(task.context), abbrev=initials_abbrev(task.target), k=5
    )
    got = oracle.keyword_ae(request)
    assert len(got) == 1
    tokens = tokenize_phrase(got[0].text)
    assert matches_abbreviation(tokens, request.abbrev)
