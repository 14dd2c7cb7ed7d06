"""Shared fixture builders for the test suite."""

from abbrex.corpus import Dialogue, Turn


def dialogue(turn_texts, dialogue_id="d0"):
    return Dialogue(
        id=dialogue_id,
        turns=tuple(Turn(speaker=i % 2, text=t) for i, t in enumerate(turn_texts)),
    )


def distribution_corpus(n_dialogues=2000):
    """Distinct nine-word sentences so neither deduplication nor the
    keyword-count clamp distorts generated keyword distributions."""
    adjs = ["quiet", "busy", "little", "bright", "dusty", "green", "narrow", "modern"]
    nouns = ["market", "garden", "library", "station", "bakery", "harbor", "museum", "theater"]
    verbs = ["opened", "closed", "flooded", "reopened", "buzzed", "emptied", "shone", "slept"]
    places = ["river", "bridge", "square", "hill", "school", "church", "park", "mall"]
    days = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "weekends"]

    def sentence(i):
        return (
            f"the {adjs[i % 8]} {nouns[i // 8 % 8]} {verbs[i // 64 % 8]} "
            f"near the {places[i // 512 % 8]} on {days[i // 4096 % 8]}"
        )

    return [
        dialogue([sentence(6 * i + j) for j in range(6)], f"long{i}")
        for i in range(n_dialogues)
    ]
