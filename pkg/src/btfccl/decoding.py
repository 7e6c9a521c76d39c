"""Region-to-triplet decoding and exact-match scoring."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import Sentiment, Triplet
from .region import CandidateRegion


@dataclass
class ScoreReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        return ScoreReport(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def format(self) -> str:
        return (f"precision {self.precision:.4f}  recall {self.recall:.4f}  f1 {self.f1:.4f}  "
                f"tp {self.tp}  fp {self.fp}  fn {self.fn}")


def decode(candidates: Iterable[CandidateRegion]) -> list[Triplet]:
    """Classified regions to triplets.

    Invalid-class regions are dropped; when several regions map to the same
    (aspect, opinion) pair the one with the highest top probability wins.
    Partially overlapping regions are all kept.
    """
    best: dict[tuple, tuple[float, Triplet]] = {}
    for cand in candidates:
        if cand.sentiment_dist is None:
            raise ValueError("candidate region has not been classified")
        dist = np.asarray(cand.sentiment_dist)
        label = int(np.argmax(dist))
        if label == Sentiment.INVALID:
            continue
        conf = float(dist[label])
        key = ((cand.a, cand.c), (cand.b, cand.d))
        if key not in best or conf > best[key][0]:
            best[key] = (conf, Triplet(key[0], key[1], Sentiment(label)))
    return sorted((t for _, t in best.values()), key=lambda t: (t.aspect[0], t.opinion[0], t.aspect[1], t.opinion[1]))


def score(pred: Sequence[Triplet], gold: Sequence[Triplet]) -> ScoreReport:
    """Exact-match counts for one sentence; each gold triplet matches at most once."""
    remaining = Counter(gold)
    tp = 0
    for t in pred:
        if remaining[t] > 0:
            remaining[t] -= 1
            tp += 1
    return ScoreReport(tp=tp, fp=len(pred) - tp, fn=len(gold) - tp)


def score_corpus(preds: Sequence[Sequence[Triplet]], golds: Sequence[Sequence[Triplet]]) -> ScoreReport:
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} sentences")
    total = ScoreReport()
    for p, g in zip(preds, golds):
        total = total + score(p, g)
    return total
