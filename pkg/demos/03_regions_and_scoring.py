"""
Boundary maps, candidate regions and exact-match scoring
========================================================

A triplet is a rectangle in the table: its upper-left corner starts both
spans and its lower-right corner ends them.
"""

import numpy as np
from btfccl.data import Sentiment, Triplet
from btfccl.decoding import decode, score
from btfccl.region import BoundaryMaps, enumerate_candidates

tokens = "the hot dogs are top notch".split()
gold = [Triplet((1, 2), (4, 5), Sentiment.POSITIVE)]

# hand-made boundary probabilities with one strong start and end corner
p_s, p_e = np.full((6, 6), 0.1), np.full((6, 6), 0.1)
p_s[1, 4] = 0.9
p_e[2, 5] = 0.8
p_e[1, 4] = 0.6          # a second, smaller rectangle
cands = enumerate_candidates(BoundaryMaps(p_s, p_e))
print("candidates", [c.corners for c in cands])

# pretend classifier: the large rectangle is positive, the other invalid
for c in cands:
    c.sentiment_dist = np.array([0.9, 0.05, 0.03, 0.02]) if c.corners == (1, 4, 2, 5) \
        else np.array([0.1, 0.1, 0.1, 0.7])
pred = decode(cands)
for t in pred:
    print(t.words(tokens))

print(score(pred, gold).format())
# the wrong sentiment is a miss even when both spans are right
print(score([Triplet((1, 2), (4, 5), Sentiment.NEUTRAL)], gold).format())
