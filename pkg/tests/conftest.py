"""Shared fixtures: a tiny model, a tiny corpus and a briefly trained source model."""

import pytest

from src.corpus import CorpusSpec, generate_corpus
from src.model import ModelConfig, init_model, train_source


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end training and adaptation runs")


@pytest.fixture
def tiny_config():
    """A model small enough for exhaustive gradient checks."""
    return ModelConfig(
        feature_dim=4,
        conv_layers=1,
        kernel_width=3,
        channels=6,
        encoder_blocks=1,
        hidden_dim=8,
        seed=7,
    )


@pytest.fixture
def tiny_model(tiny_config):
    return init_model(tiny_config)


@pytest.fixture
def tiny_spec():
    return CorpusSpec(
        count=8,
        words_per_utterance=(1, 2),
        letters_per_word=(2, 3),
        frames_per_char=(2, 3),
        silence_frames=(1, 2),
        feature_dim=4,
        alphabet="ABCD",
        seed=3,
    )


@pytest.fixture
def tiny_corpus(tiny_spec):
    return generate_corpus(tiny_spec)


@pytest.fixture(scope="session")
def trained_tiny():
    """Source model trained for a few epochs on a small clean corpus: (model, corpus)."""
    config = ModelConfig(feature_dim=8, channels=16, hidden_dim=16, encoder_blocks=1, seed=1)
    spec = CorpusSpec(
        count=24,
        words_per_utterance=(1, 2),
        letters_per_word=(2, 3),
        feature_dim=8,
        alphabet="ABCDEF",
        template_jitter=0.1,
        seed=11,
    )
    corpus = generate_corpus(spec)
    model, _ = train_source(init_model(config), corpus, epochs=8, lr=0.01, batch_size=4, seed=1)
    return model, corpus
