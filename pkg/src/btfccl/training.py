"""Optimisation loop with validation-based model selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .checkpoint import Checkpoint
from .config import RunConfig
from .data import Example, Triplet, Vocab
from .decoding import ScoreReport, score_corpus
from .model import BTFCCL, boundary_loss, region_loss, total_loss  # noqa: F401  (re-exported)
from .optim import Adam, clip_grad_norm


@dataclass
class EpochRecord:
    epoch: int
    l_cl: float
    l_s: float
    l_e: float
    l_sp: float
    total: float
    valid: ScoreReport


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[EpochRecord]
    model: BTFCCL


def evaluate(model: BTFCCL, examples: Sequence[Example]) -> tuple[ScoreReport, list[list[Triplet]]]:
    preds = [model.predict(ex.sentence.ids) for ex in examples]
    return score_corpus(preds, [list(ex.triplets) for ex in examples]), preds


def model_from_checkpoint(ckpt: Checkpoint) -> tuple[BTFCCL, Vocab]:
    vocab = Vocab(ckpt.vocab)
    model = BTFCCL(ckpt.config, len(vocab))
    model.params.load_state(ckpt.params)
    return model, vocab


def train(config: RunConfig, train_set: Sequence[Example], valid_set: Sequence[Example], vocab: Vocab,
          on_epoch: Callable[[EpochRecord], None] | None = None) -> TrainResult:
    """Train for ``config.epochs`` epochs and keep the best-validation-F1 parameters.

    Ties in validation F1 keep the earlier epoch.  Every random choice
    (initialisation, shuffling, dropout, Invalid-region sampling) derives
    from ``config.seed``.
    """
    if not train_set or not valid_set:
        raise ValueError("training and validation sets must be non-empty")
    model = BTFCCL(config, len(vocab))
    shuffle_rng, dropout_rng, region_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(3))
    optimizer = Adam(model.params, lr=config.learning_rate)

    history: list[EpochRecord] = []
    best_state, best_epoch, best_f1 = None, 0, -1.0
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(train_set))
        sums = np.zeros(5)
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            model.params.zero_grad()
            terms = model.losses(batch, training=True, dropout_rng=dropout_rng, region_rng=region_rng)
            terms.total.backward()
            clip_grad_norm(model.params, config.clip_norm)
            optimizer.step()
            sums += terms.values()
            n_batches += 1
        report, _ = evaluate(model, valid_set)
        means = sums / n_batches
        record = EpochRecord(epoch, *map(float, means), valid=report)
        history.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if report.f1 > best_f1:
            best_state, best_epoch, best_f1 = model.params.state(), epoch, report.f1

    model.params.load_state(best_state)
    model.params.zero_grad()
    ckpt = Checkpoint(config=config, params=best_state, vocab=vocab.words(),
                      best_epoch=best_epoch, best_valid_f1=best_f1)
    return TrainResult(ckpt, history, model)
