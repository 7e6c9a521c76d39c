import numpy as np
import pytest
from hypothesis import given, strategies as st

from btfccl.data import Sentiment, Triplet
from btfccl.decoding import ScoreReport, decode, score, score_corpus
from btfccl.region import CandidateRegion


def classified(a, b, c, d, dist):
    return CandidateRegion(a, b, c, d, sentiment_dist=np.asarray(dist, dtype=np.float64))


def test_region_to_triplet_orientation():
    (t,) = decode([classified(0, 2, 1, 3, [0.7, 0.1, 0.1, 0.1])])
    assert t == Triplet((0, 1), (2, 3), Sentiment.POSITIVE)


def test_invalid_regions_are_dropped():
    assert decode([classified(0, 0, 0, 0, [0.1, 0.1, 0.1, 0.7]),
                   classified(1, 1, 1, 1, [0.0, 0.0, 0.0, 1.0])]) == []


def test_duplicates_keep_most_confident():
    out = decode([classified(0, 1, 0, 1, [0.6, 0.1, 0.2, 0.1]),
                  classified(0, 1, 0, 1, [0.05, 0.9, 0.03, 0.02])])
    assert out == [Triplet((0, 0), (1, 1), Sentiment.NEGATIVE)]


def test_overlapping_regions_are_kept_and_sorted():
    out = decode([classified(2, 0, 2, 0, [1, 0, 0, 0]),
                  classified(0, 1, 1, 2, [0, 0, 1, 0]),
                  classified(0, 1, 0, 1, [1, 0, 0, 0])])
    assert [(t.aspect, t.opinion) for t in out] == [((0, 0), (1, 1)), ((0, 1), (1, 2)), ((2, 2), (0, 0))]


def test_unclassified_candidate_is_an_error():
    with pytest.raises(ValueError):
        decode([CandidateRegion(0, 0, 0, 0)])


A = Triplet((0, 0), (2, 2), Sentiment.POSITIVE)
B = Triplet((1, 1), (3, 3), Sentiment.NEGATIVE)
C = Triplet((1, 1), (3, 3), Sentiment.NEUTRAL)


def test_perfect_score():
    r = score([A, B], [A, B])
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_empty_prediction():
    r = score([], [A])
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)


def test_hand_counted_case():
    r = score([A, C], [A, B])
    assert (r.tp, r.fp, r.fn) == (1, 1, 1)
    assert (r.precision, r.recall, r.f1) == (0.5, 0.5, 0.5)


def test_each_gold_matches_once():
    r = score([A, A], [A])
    assert (r.tp, r.fp, r.fn) == (1, 1, 0)


def test_corpus_reduction():
    total = score_corpus([[A], [], [B, C]], [[A], [B], [B]])
    assert (total.tp, total.fp, total.fn) == (2, 1, 1)
    assert ScoreReport(1, 2, 3) + ScoreReport(4, 5, 6) == ScoreReport(5, 7, 9)


triplets = st.lists(st.sampled_from([A, B, C, Triplet((0, 1), (2, 2), Sentiment.NEUTRAL)]), max_size=5)


@given(triplets, triplets)
def test_swapping_swaps_precision_and_recall(pred, gold):
    forward, backward = score(pred, gold), score(gold, pred)
    assert forward.tp == backward.tp
    assert forward.precision == backward.recall and forward.recall == backward.precision
    assert forward.tp <= min(len(pred), len(gold))
    assert 0.0 <= forward.f1 <= 1.0


def test_output_order_is_aspect_start_then_opinion_start():
    out = decode([classified(3, 1, 4, 3, [1, 0, 0, 0]), classified(3, 0, 3, 2, [1, 0, 0, 0])])
    assert [(t.aspect[0], t.opinion[0]) for t in out] == [(3, 0), (3, 1)]
