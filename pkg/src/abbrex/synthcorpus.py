"""Deterministic template-generated dialogue corpus.

The real six-turn dialogue corpus used for simulation is not
redistributable here, so tests, demos, and the documented benchmarks run
on a synthetic stand-in with the same shape: two speakers, six turns per
dialogue, short everyday phrases with occasional commas, contractions,
digits, and a sprinkle of turns longer than ten tokens to exercise the
length filter. Generation is seeded and reproducible.
"""

from __future__ import annotations

import random

from .corpus import Dialogue, Turn

_PEOPLE = ["him", "her", "them", "my brother", "my sister", "the kids", "grandma"]
_PLACES = ["bedroom", "backyard", "garden", "kitchen", "park", "garage", "basement"]
_ACTIVITIES = ["play", "read", "sleep", "paint", "dance", "practice", "study"]
_MEALS = ["pizza", "pasta", "soup", "salad", "pancakes", "tacos", "noodles"]
_DAYS = ["monday", "tuesday", "friday", "saturday", "sunday", "tomorrow", "tonight"]
_WEATHER = ["sunny", "rainy", "windy", "cloudy", "freezing", "lovely", "humid"]
_FEELINGS = ["good", "great", "fine", "tired", "busy", "happy", "okay"]
_HOBBIES = ["music", "movies", "books", "soccer", "chess", "baking", "hiking"]
_TIMES = ["7 pm", "8 am", "noon", "6 pm", "9 am"]

_OPENERS = [
    "how are you doing today?",
    "what did you do last weekend?",
    "do you have plans for {day}?",
    "how was the weather there?",
    "what kind of {hobby} do you like?",
    "did you see {person} yesterday?",
    "are you coming to dinner on {day}?",
    "what are you making for dinner?",
]

_REPLIES = [
    "i'm feeling {feeling} today",
    "i saw {person} {activity} in the {place}",
    "we had {meal} for dinner",
    "it was {weather} all day",
    "i stayed home and watched movies",
    "we went to the {place} with {person}",
    "i think {day} works for me",
    "ok, sounds {feeling}",
    "oh, i'm sorry to hear that",
    "you're welcome to join us",
    "maybe we can meet at {time}",
    "that sounds like a {feeling} plan",
    "i don't think i can make it",
    "let's talk about it on {day}",
    "sure, see you at the {place}",
    "my favorite is {hobby}, honestly",
]

_FOLLOWUPS = [
    "did {person} enjoy the {place}?",
    "was the {meal} any good?",
    "can you bring {meal} on {day}?",
    "do you still {activity} every week?",
    "should we invite {person} too?",
    "will it be {weather} again tomorrow?",
]

# Deliberately longer than ten words, to exercise the length filter.
_LONG_REPLIES = [
    "honestly i think we should wait until next week before we decide anything",
    "we spent the whole afternoon cleaning the garage and then made dinner together",
]

_SLOTS = {
    "person": _PEOPLE,
    "place": _PLACES,
    "activity": _ACTIVITIES,
    "meal": _MEALS,
    "day": _DAYS,
    "weather": _WEATHER,
    "feeling": _FEELINGS,
    "hobby": _HOBBIES,
    "time": _TIMES,
}


def _fill(template: str, rng: random.Random) -> str:
    text = template
    for name, pool in _SLOTS.items():
        while "{" + name + "}" in text:
            text = text.replace("{" + name + "}", rng.choice(pool), 1)
    return text


def synth_dialogue(dialogue_id: str, rng: random.Random, long_turn_rate: float = 0.04) -> Dialogue:
    turns: list[Turn] = []
    for index in range(6):
        if index == 0:
            template = rng.choice(_OPENERS)
        elif index % 2 == 0:
            template = rng.choice(_FOLLOWUPS)
        elif rng.random() < long_turn_rate:
            template = rng.choice(_LONG_REPLIES)
        else:
            template = rng.choice(_REPLIES)
        turns.append(Turn(speaker=index % 2, text=_fill(template, rng)))
    return Dialogue(id=dialogue_id, turns=tuple(turns))


def synth_corpus(n_dialogues: int, seed: int, prefix: str = "synth") -> list[Dialogue]:
    """Generate a reproducible six-turn dialogue corpus."""
    rng = random.Random(seed)
    return [
        synth_dialogue(f"{prefix}_{seed}_{i:04d}", rng) for i in range(n_dialogues)
    ]


def test_split(n_dialogues: int = 280) -> list[Dialogue]:
    """The fixed test split used by the benchmark suite: 280 dialogues."""
    return synth_corpus(n_dialogues, seed=20260, prefix="synthtest")


def train_split(n_dialogues: int = 1120) -> list[Dialogue]:
    """The fixed train split used to fit the desk-scale n-gram model."""
    return synth_corpus(n_dialogues, seed=712, prefix="synthtrain")
