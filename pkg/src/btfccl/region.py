"""Boundary tagging, candidate regions and region sentiment classification.

A triplet is a rectangle in the relation table: rows ``a..c`` hold the aspect
span, columns ``b..d`` the opinion span.  The upper-left cell ``(a, b)`` is
tagged S and the lower-right cell ``(c, d)`` is tagged E.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .data import Sentiment, Triplet
from .encoder import glorot
from .errors import ConfigError
from .tensor import ParamStore, Tensor

N_CLASSES = 4


@dataclass(frozen=True)
class RegionConfig:
    d_table: int = 64
    tau_s: float = 0.5
    tau_e: float = 0.5
    max_span: int = 8
    neg_ratio: int = 3
    neg_cap: int = 50
    boundary_prior: float = 0.05

    def __post_init__(self):
        for name in ("tau_s", "tau_e", "boundary_prior"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.max_span < 1:
            raise ConfigError("max_span must be >= 1")
        if self.neg_ratio < 0 or self.neg_cap < 0:
            raise ConfigError("negative sampling ratio and cap must be >= 0")


@dataclass
class BoundaryMaps:
    p_s: np.ndarray
    p_e: np.ndarray


@dataclass
class CandidateRegion:
    a: int
    b: int
    c: int
    d: int
    score_s: float = 1.0
    score_e: float = 1.0
    sentiment_dist: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (0 <= self.a <= self.c and 0 <= self.b <= self.d):
            raise ValueError(f"malformed region S({self.a},{self.b}) E({self.c},{self.d})")

    @property
    def corners(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @classmethod
    def from_triplet(cls, t: Triplet) -> "CandidateRegion":
        return cls(t.aspect[0], t.opinion[0], t.aspect[1], t.opinion[1])


def init_region(params: ParamStore, cfg: RegionConfig, rng: np.random.Generator,
                prefix: str = "region") -> None:
    c = cfg.d_table
    # boundary biases start at a low prior so untrained maps yield few candidates
    prior_logit = float(np.log(cfg.boundary_prior / (1.0 - cfg.boundary_prior)))
    for head in ("start", "end"):
        params.add(f"{prefix}.{head}.weight", glorot(rng, c, 1))
        params.add(f"{prefix}.{head}.bias", np.full(1, prior_logit))
    params.add(f"{prefix}.classifier.weight", glorot(rng, 3 * c, N_CLASSES))
    params.add(f"{prefix}.classifier.bias", np.zeros(N_CLASSES))


def boundary_logits(table: Tensor, params: ParamStore, prefix: str = "region") -> tuple[Tensor, Tensor]:
    n = table.shape[0]
    out = []
    for head in ("start", "end"):
        logit = T.affine(table, params[f"{prefix}.{head}.weight"], params[f"{prefix}.{head}.bias"])
        out.append(logit.reshape(n, n))
    return out[0], out[1]


def boundary_probs(table: Tensor, params: ParamStore, prefix: str = "region") -> BoundaryMaps:
    s_logit, e_logit = boundary_logits(table, params, prefix)
    return BoundaryMaps(T.sigmoid(s_logit).data, T.sigmoid(e_logit).data)


def enumerate_candidates(maps: BoundaryMaps, tau_s: float = 0.5, tau_e: float = 0.5,
                         max_span: int = 8) -> list[CandidateRegion]:
    """All (S, E) cell pairs forming a rectangle no wider or taller than ``max_span``.

    Order: S cells row-major, then E cells row-major.
    """
    if not (0 < tau_s < 1 and 0 < tau_e < 1):
        raise ConfigError("thresholds must lie in (0, 1)")
    starts = np.argwhere(maps.p_s >= tau_s)
    ends = np.argwhere(maps.p_e >= tau_e)
    out = []
    if len(starts) == 0 or len(ends) == 0:
        return out
    for a, b in starts:
        ok = ((ends[:, 0] >= a) & (ends[:, 1] >= b)
              & (ends[:, 0] - a < max_span) & (ends[:, 1] - b < max_span))
        for c, d in ends[ok]:
            out.append(CandidateRegion(int(a), int(b), int(c), int(d),
                                       float(maps.p_s[a, b]), float(maps.p_e[c, d])))
    return out


def region_repr(table: Tensor, region: CandidateRegion) -> Tensor:
    """``[r_ab; r_cd; max over the rectangle]``, length ``3 * d_table``."""
    n = table.shape[0]
    a, b, c, d = region.corners
    if c >= n or d >= table.shape[1]:
        raise IndexError(f"region {region.corners} outside a {n}x{table.shape[1]} table")
    width = table.shape[-1]
    pooled = T.reduce_max_pool(table[a:c + 1, b:d + 1].reshape(-1, width), axis=0)
    return T.concat([table[a, b], table[c, d], pooled], axis=-1)


def region_logits(reprs: Tensor, params: ParamStore, prefix: str = "region") -> Tensor:
    return T.affine(reprs, params[f"{prefix}.classifier.weight"], params[f"{prefix}.classifier.bias"])


def classify_region(r: Tensor, params: ParamStore, prefix: str = "region") -> Tensor:
    """Softmax over {Positive, Negative, Neutral, Invalid}."""
    return T.softmax(region_logits(r, params, prefix), axis=-1)


def boundary_targets(n: int, triplets) -> tuple[np.ndarray, np.ndarray]:
    """Binary corner maps: S at (aspect start, opinion start), E at the ends."""
    y_s = np.zeros((n, n))
    y_e = np.zeros((n, n))
    for t in triplets:
        y_s[t.aspect[0], t.opinion[0]] = 1
        y_e[t.aspect[1], t.opinion[1]] = 1
    return y_s, y_e


def sample_training_regions(n: int, triplets, cfg: RegionConfig,
                            rng: np.random.Generator) -> list[tuple[CandidateRegion, int]]:
    """Gold regions with their sentiment plus sampled Invalid regions.

    Invalid regions are drawn first from mismatched pairings of gold corners
    (the confusions decoding actually meets), then uniformly from all
    rectangles within ``max_span``.
    """
    gold = {}
    for t in triplets:
        gold.setdefault((t.aspect[0], t.opinion[0], t.aspect[1], t.opinion[1]), int(t.sentiment))
    out = [(CandidateRegion(*corners), label) for corners, label in gold.items()]
    budget = min(cfg.neg_ratio * len(gold), cfg.neg_cap)
    if budget == 0:
        return out

    chosen: list[tuple[int, int, int, int]] = []
    seen = set(gold)
    crossed = []
    for a, b, _, _ in gold:
        for _, _, c, d in gold:
            key = (a, b, c, d)
            if a <= c and b <= d and c - a < cfg.max_span and d - b < cfg.max_span and key not in seen:
                seen.add(key)
                crossed.append(key)
    if crossed:
        order = rng.permutation(len(crossed))
        chosen.extend(crossed[i] for i in order[:budget])

    span = min(cfg.max_span, n)
    total_rects = sum(min(span, n - a) for a in range(n)) ** 2
    attempts = 0
    while len(chosen) < budget and len(seen) < total_rects and attempts < 50 * budget:
        attempts += 1
        a, b = int(rng.integers(n)), int(rng.integers(n))
        c = a + int(rng.integers(min(span, n - a)))
        d = b + int(rng.integers(min(span, n - b)))
        key = (a, b, c, d)
        if key in seen:
            continue
        seen.add(key)
        chosen.append(key)
    out.extend((CandidateRegion(*key), int(Sentiment.INVALID)) for key in chosen)
    return out
