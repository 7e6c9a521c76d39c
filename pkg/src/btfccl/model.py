"""The full table-filling extraction model and its loss assembly."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .config import RunConfig
from .contrastive import batch_negatives, contrastive_loss, init_contrastive, pool_positive, project
from .data import Example, Triplet
from .decoding import decode
from .errors import NonFiniteError
from .encoder import encode, init_encoder
from .mmcnn import init_mmcnn, mmcnn_stack
from .region import (
    CandidateRegion,
    boundary_logits,
    boundary_targets,
    enumerate_candidates,
    BoundaryMaps,
    init_region,
    region_logits,
    region_repr,
    sample_training_regions,
)
from .relation_table import build_table, init_table
from .tensor import ParamStore, Tensor


@dataclass
class SentenceOutput:
    table: Tensor
    h_cls: Tensor
    s_logits: Tensor
    e_logits: Tensor


@dataclass
class LossTerms:
    l_cl: Tensor
    l_s: Tensor
    l_e: Tensor
    l_sp: Tensor
    total: Tensor

    def values(self) -> tuple[float, float, float, float, float]:
        return (self.l_cl.item(), self.l_s.item(), self.l_e.item(), self.l_sp.item(), self.total.item())


def boundary_loss(s_logits: Tensor, e_logits: Tensor, y_s, y_e) -> tuple[Tensor, Tensor]:
    """Mean logit-space binary cross-entropy for the S and E maps."""
    return T.bce_with_logits(s_logits, y_s), T.bce_with_logits(e_logits, y_e)


def region_loss(logits: Tensor | None, gold: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of the gold class over training regions."""
    if logits is None or len(gold) == 0:
        return Tensor(0.0)
    logp = T.log_softmax(logits, axis=-1)
    picked = logp[np.arange(len(gold)), np.asarray(gold, dtype=np.int64)]
    return -(picked.mean())


def total_loss(l_cl: Tensor, l_s: Tensor, l_e: Tensor, l_sp: Tensor) -> Tensor:
    """Unweighted sum of the four terms."""
    terms = {"L_CL": l_cl, "L_S": l_s, "L_E": l_e, "L_SP": l_sp}
    if not all(np.isfinite(t.data).all() for t in terms.values()):
        shown = " ".join(f"{k}={t.item()}" for k, t in terms.items())
        raise NonFiniteError(f"non-finite loss: {shown}")
    return l_cl + l_s + l_e + l_sp


class BTFCCL:
    """Encoder, relation table, convolution stack and region heads sharing one ParamStore."""

    def __init__(self, config: RunConfig, vocab_size: int, seed: int | None = None):
        self.config = config
        self.enc_cfg = config.encoder(vocab_size)
        self.table_cfg = config.table()
        self.mmcnn_cfg = config.mmcnn()
        self.cl_cfg = config.contrastive()
        self.region_cfg = config.region()
        self.params = ParamStore()
        rng = np.random.default_rng(config.seed if seed is None else seed)
        init_encoder(self.params, self.enc_cfg, rng)
        init_table(self.params, self.table_cfg, rng)
        init_mmcnn(self.params, self.mmcnn_cfg, rng)
        init_contrastive(self.params, self.cl_cfg, rng)
        init_region(self.params, self.region_cfg, rng)

    # -- forward -----------------------------------------------------------
    def forward(self, ids, training: bool = False, rng: np.random.Generator | None = None) -> SentenceOutput:
        H, h_cls = encode(ids, self.params, self.enc_cfg, training, rng)
        table = mmcnn_stack(build_table(H, self.params), self.params, self.mmcnn_cfg)
        s_logits, e_logits = boundary_logits(table, self.params)
        return SentenceOutput(table, h_cls, s_logits, e_logits)

    def losses(self, batch: Sequence[Example], training: bool = False,
               dropout_rng: np.random.Generator | None = None,
               region_rng: np.random.Generator | None = None,
               regions: Sequence[list] | None = None) -> LossTerms:
        """Loss terms averaged over the sentences of ``batch``.

        ``regions`` fixes the classified regions per sentence (used by
        gradient checks); otherwise they are sampled with ``region_rng``.
        """
        if not batch:
            raise ValueError("empty batch")
        if regions is None:
            region_rng = region_rng or np.random.default_rng(0)
            regions = [sample_training_regions(len(ex.sentence), ex.triplets, self.region_cfg, region_rng)
                       for ex in batch]
        l_s = l_e = l_sp = None
        pooled, sentence_vecs = [], []
        for ex, labelled in zip(batch, regions):
            out = self.forward(ex.sentence.ids, training, dropout_rng)
            n = len(ex.sentence)
            y_s, y_e = boundary_targets(n, ex.triplets)
            s_term, e_term = boundary_loss(out.s_logits, out.e_logits, y_s, y_e)
            if labelled:
                reprs = T.stack([region_repr(out.table, r) for r, _ in labelled])
                sp_term = region_loss(region_logits(reprs, self.params), [g for _, g in labelled])
            else:
                sp_term = Tensor(0.0)
            l_s = s_term if l_s is None else l_s + s_term
            l_e = e_term if l_e is None else l_e + e_term
            l_sp = sp_term if l_sp is None else l_sp + sp_term
            if self.cl_cfg.enabled:
                pooled.append(project(pool_positive(out.table), self.params, self.cl_cfg))
                sentence_vecs.append(out.h_cls)
        scale = 1.0 / len(batch)
        l_s, l_e, l_sp = l_s * scale, l_e * scale, l_sp * scale
        if self.cl_cfg.enabled:
            l_cl = None
            for i, h_cls in enumerate(sentence_vecs):
                term = contrastive_loss(h_cls, pooled[i], batch_negatives(pooled, i), self.cl_cfg.margin)
                l_cl = term if l_cl is None else l_cl + term
            l_cl = l_cl * scale
        else:
            l_cl = Tensor(0.0)
        return LossTerms(l_cl, l_s, l_e, l_sp, total_loss(l_cl, l_s, l_e, l_sp))

    # -- inference -----------------------------------------------------------
    def candidates(self, ids) -> list[CandidateRegion]:
        """Thresholded candidate regions with their class distributions."""
        with T.no_grad():
            out = self.forward(ids)
            maps = BoundaryMaps(T.sigmoid(out.s_logits).data, T.sigmoid(out.e_logits).data)
            cands = enumerate_candidates(maps, self.region_cfg.tau_s, self.region_cfg.tau_e,
                                         self.region_cfg.max_span)
            if cands:
                reprs = T.stack([region_repr(out.table, c) for c in cands])
                dists = T.softmax(region_logits(reprs, self.params), axis=-1).data
                for cand, dist in zip(cands, dists):
                    cand.sentiment_dist = dist
        return cands

    def predict(self, ids) -> list[Triplet]:
        return decode(self.candidates(ids))
