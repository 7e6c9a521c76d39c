"""
Training on a toy corpus
========================

Eight short restaurant sentences are enough to watch the model memorise
its triplets.  Takes a few seconds on one core.
"""

import tempfile
from pathlib import Path

from btfccl.checkpoint import load_checkpoint, save_checkpoint
from btfccl.config import RunConfig
from btfccl.data import build_vocab, encode_examples
from btfccl.synthetic import overfit_corpus
from btfccl.training import model_from_checkpoint, train

raw = overfit_corpus()
vocab = build_vocab([ex.sentence for ex in raw])
examples = encode_examples(raw, vocab)

config = RunConfig(epochs=40, batch_size=2, seed=0)
result = train(config, examples, examples, vocab,
               on_epoch=lambda r: r.epoch % 10 == 0 and print(
                   f"epoch {r.epoch:3d}  total {r.total:.3f}  valid f1 {r.valid.f1:.3f}"))
print("best epoch", result.checkpoint.best_epoch, "f1", result.checkpoint.best_valid_f1)

# round trip through the binary checkpoint
path = Path(tempfile.mkdtemp()) / "toy.btf"
save_checkpoint(path, result.checkpoint)
model, vocab = model_from_checkpoint(load_checkpoint(path))

for text in ("the pizza was delicious", "music was loud and annoying"):
    tokens = text.split()
    print(text, "->", [t.words(tokens) for t in model.predict(vocab.encode(tokens))])
