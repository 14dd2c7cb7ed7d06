import pytest

from abbrex import lm as lm_mod
from abbrex.corpus import make_tasks, tokenize_phrase
from abbrex.synthcorpus import test_split, train_split


@pytest.fixture(scope="session")
def test_dialogues():
    return test_split()


@pytest.fixture(scope="session")
def train_dialogues():
    return train_split()


@pytest.fixture(scope="session")
def test_tasks(test_dialogues):
    return make_tasks(test_dialogues, max_len=10)


@pytest.fixture(scope="session")
def desk_model(train_dialogues):
    sentences = []
    for dialogue in train_dialogues:
        for turn in dialogue.turns:
            sentences.append([t.surface for t in tokenize_phrase(turn.text)])
    return lm_mod.train(sentences, order=3)
