"""Tiny hand-written corpora for smoke tests, demos and overfit checks."""

from __future__ import annotations

from .data import Example, Sentence, Sentiment, Triplet

POS, NEG, NEU = Sentiment.POSITIVE, Sentiment.NEGATIVE, Sentiment.NEUTRAL

# (sentence, [(aspect index, opinion index, sentiment), ...]); aspects and
# opinions are single tokens and never share a position.
_OVERFIT = [
    ("the pizza was delicious", [(1, 3, POS)]),
    ("service felt slow today", [(0, 2, NEG)]),
    ("our waiter seemed rude", [(1, 3, NEG)]),
    ("the decor is okay", [(1, 3, NEU)]),
    ("cheap wine but stale bread", [(1, 0, POS), (4, 3, NEG)]),
    ("the dessert looked lovely", [(1, 3, POS)]),
    ("music was loud and annoying", [(0, 2, NEG), (0, 4, NEG)]),
    ("portions are average here", [(0, 2, NEU)]),
]


def overfit_corpus() -> list[Example]:
    """Eight short sentences with single-token aspects and opinions (ids unset)."""
    out = []
    for text, labels in _OVERFIT:
        triplets = tuple(Triplet((a, a), (o, o), s) for a, o, s in labels)
        out.append(Example(Sentence(tuple(text.split())), triplets))
    return out
