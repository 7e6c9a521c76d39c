import numpy as np
import pytest

from btfccl.config import RunConfig
from btfccl.data import Example, Sentence, Sentiment, Triplet, Vocab, build_vocab, encode_examples
from btfccl.synthetic import overfit_corpus
from btfccl.training import train


def small_config(**overrides) -> RunConfig:
    """Narrow model so unit tests stay fast."""
    base = dict(d_model=16, n_layers=1, n_heads=2, d_ff=32, d_table=12, n_slices=4,
                dropout=0.0, mmcnn_blocks=1, epochs=2, batch_size=2, seed=0)
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_vocab():
    return Vocab("a b c d e f".split())


@pytest.fixture
def toy_pair(toy_vocab):
    """Two 3-token sentences, one gold triplet each."""
    s1 = Example(Sentence(("a", "b", "c"), toy_vocab.encode(["a", "b", "c"])),
                 (Triplet((0, 0), (2, 2), Sentiment.POSITIVE),))
    s2 = Example(Sentence(("d", "e", "f"), toy_vocab.encode(["d", "e", "f"])),
                 (Triplet((1, 1), (0, 0), Sentiment.NEGATIVE),))
    return [s1, s2]


@pytest.fixture(scope="session")
def overfit_data():
    raw = overfit_corpus()
    vocab = build_vocab([ex.sentence for ex in raw])
    return encode_examples(raw, vocab), vocab


OVERFIT_CONFIG = dict(epochs=200, batch_size=2, seed=0)


@pytest.fixture(scope="session")
def overfit_run(overfit_data):
    """One full overfit training run shared by the acceptance and CLI tests."""
    import time

    examples, vocab = overfit_data
    start = time.perf_counter()
    result = train(RunConfig(**OVERFIT_CONFIG), examples, examples, vocab)
    return result, time.perf_counter() - start


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
