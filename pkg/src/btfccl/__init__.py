"""Boundary-driven table filling with cross-granularity contrastive alignment
for aspect sentiment triplet extraction, on a small numpy autodiff engine."""

from .config import RunConfig
from .data import Example, Sentence, Sentiment, Triplet, Vocab, build_vocab, load_split, parse_line
from .decoding import ScoreReport, decode, score
from .model import BTFCCL
from .training import evaluate, train

__all__ = [
    "BTFCCL",
    "Example",
    "RunConfig",
    "ScoreReport",
    "Sentence",
    "Sentiment",
    "Triplet",
    "Vocab",
    "build_vocab",
    "decode",
    "evaluate",
    "load_split",
    "parse_line",
    "score",
    "train",
]

__version__ = "0.1.0"
