"""Reading and writing ASTE triplet files, vocabulary construction and corpus statistics.

Line grammar (ASTE-Data-V2)::

    <space separated tokens>####[([a0, a1, ...], [o0, o1, ...], 'POS'), ...]

Index lists are ascending, contiguous, zero-based token positions.
"""

from __future__ import annotations

import ast
import enum
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import LengthError, ParseError

SEPARATOR = "####"
PAD, UNK, CLS = "<pad>", "<unk>", "<cls>"
PAD_ID, UNK_ID, CLS_ID = 0, 1, 2


class Sentiment(enum.IntEnum):
    """Region classes; the integer value is the classifier output index."""

    POSITIVE = 0
    NEGATIVE = 1
    NEUTRAL = 2
    INVALID = 3

    @property
    def tag(self) -> str:
        return _TAG_OF[self]

    @classmethod
    def from_tag(cls, tag: str) -> "Sentiment":
        try:
            return _SENTIMENT_OF[tag]
        except KeyError:
            raise ValueError(f"unknown polarity {tag!r}") from None


_SENTIMENT_OF = {"POS": Sentiment.POSITIVE, "NEG": Sentiment.NEGATIVE, "NEU": Sentiment.NEUTRAL}
_TAG_OF = {v: k for k, v in _SENTIMENT_OF.items()}
_TAG_OF[Sentiment.INVALID] = "INV"


@dataclass(frozen=True, order=True)
class Triplet:
    aspect: tuple[int, int]
    opinion: tuple[int, int]
    sentiment: Sentiment

    def __post_init__(self):
        for name, (start, end) in (("aspect", self.aspect), ("opinion", self.opinion)):
            if not 0 <= start <= end:
                raise ValueError(f"malformed {name} span {(start, end)}")
        if self.sentiment == Sentiment.INVALID:
            raise ValueError("a triplet cannot carry the Invalid class")

    def words(self, tokens: Sequence[str]) -> tuple[str, str, str]:
        a0, a1 = self.aspect
        o0, o1 = self.opinion
        return " ".join(tokens[a0:a1 + 1]), " ".join(tokens[o0:o1 + 1]), self.sentiment.tag


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    ids: tuple[int, ...] | None = None

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Example:
    sentence: Sentence
    triplets: tuple[Triplet, ...]


@dataclass
class CorpusStats:
    sentence_count: int = 0
    pos_count: int = 0
    neu_count: int = 0
    neg_count: int = 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.sentence_count, self.pos_count, self.neu_count, self.neg_count)


# Published statistics of the refined SemEval ASTE splits: (sentences, +, 0, -).
REFERENCE_STATS = {
    ("14res", "train"): (1266, 1692, 166, 480),
    ("14res", "dev"): (310, 404, 54, 119),
    ("14res", "test"): (492, 773, 66, 155),
    ("14lap", "train"): (906, 817, 126, 517),
    ("14lap", "dev"): (219, 169, 36, 141),
    ("14lap", "test"): (328, 364, 63, 116),
    ("15res", "train"): (605, 783, 25, 205),
    ("15res", "dev"): (148, 185, 11, 53),
    ("15res", "test"): (322, 317, 25, 143),
    ("16res", "train"): (857, 1015, 506, 329),
    ("16res", "dev"): (210, 252, 11, 76),
    ("16res", "test"): (326, 407, 29, 78),
}


class Vocab:
    """Lowercased surface-form vocabulary with reserved PAD/UNK/CLS ids."""

    def __init__(self, words: Iterable[str] = ()):
        self.itos = [PAD, UNK, CLS]
        for w in words:
            if w not in (PAD, UNK, CLS):
                self.itos.append(w)
        self.stoi = {w: i for i, w in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def encode(self, tokens: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.stoi.get(t.lower(), UNK_ID) for t in tokens)

    def words(self) -> list[str]:
        """Non-reserved entries in id order (what a checkpoint stores)."""
        return self.itos[3:]


def build_vocab(corpus: Sequence[Sentence | Sequence[str]], min_freq: int = 1) -> Vocab:
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for item in corpus:
        tokens = item.tokens if isinstance(item, Sentence) else item
        counts.update(t.lower() for t in tokens)
    kept = [w for w, c in counts.items() if c >= min_freq]
    kept.sort(key=lambda w: (-counts[w], w))
    return Vocab(kept)


def _span(indices, what: str, n: int, lineno) -> tuple[int, int]:
    if not isinstance(indices, (list, tuple)) or not indices:
        raise ParseError(f"{what} index list must be a non-empty list", lineno)
    if not all(isinstance(i, int) and not isinstance(i, bool) for i in indices):
        raise ParseError(f"{what} indices must be integers", lineno)
    start, end = indices[0], indices[-1]
    if list(indices) != list(range(start, end + 1)):
        raise ParseError(f"{what} index list {list(indices)} is not contiguous", lineno)
    if start < 0 or end >= n:
        raise ParseError(f"{what} index out of range for {n} tokens", lineno)
    return start, end


def parse_line(line: str, vocab: Vocab | None = None, lineno: int | None = None,
               max_len: int | None = None) -> tuple[Sentence, list[Triplet]]:
    """Parse one dataset line into a sentence and its gold triplets.

    When ``vocab`` is given the sentence carries encoded ids, otherwise
    ``ids`` is ``None``.
    """
    line = line.rstrip("\n\r")
    if line.count(SEPARATOR) != 1:
        raise ParseError(f"expected exactly one {SEPARATOR!r} separator", lineno)
    text, labels = line.split(SEPARATOR)
    tokens = tuple(text.split())
    if not tokens:
        raise ParseError("sentence has no tokens", lineno)
    if max_len is not None and len(tokens) > max_len:
        raise LengthError(f"sentence has {len(tokens)} tokens, limit is {max_len}")
    try:
        raw = ast.literal_eval(labels.strip())
    except (ValueError, SyntaxError) as exc:
        raise ParseError(f"malformed triplet list: {exc}", lineno) from None
    if not isinstance(raw, list):
        raise ParseError("triplet list must be a list", lineno)
    triplets = []
    for item in raw:
        if not isinstance(item, tuple) or len(item) != 3:
            raise ParseError(f"triplet must be (aspect, opinion, polarity), got {item!r}", lineno)
        aspect = _span(item[0], "aspect", len(tokens), lineno)
        opinion = _span(item[1], "opinion", len(tokens), lineno)
        try:
            sentiment = Sentiment.from_tag(item[2])
        except (ValueError, TypeError):
            raise ParseError(f"unknown polarity {item[2]!r}", lineno) from None
        triplets.append(Triplet(aspect, opinion, sentiment))
    ids = vocab.encode(tokens) if vocab is not None else None
    return Sentence(tokens, ids), triplets


def format_line(tokens: Sequence[str], triplets: Iterable[Triplet]) -> str:
    """Inverse of :func:`parse_line` (without trailing newline)."""
    parts = []
    for t in triplets:
        a = list(range(t.aspect[0], t.aspect[1] + 1))
        o = list(range(t.opinion[0], t.opinion[1] + 1))
        parts.append(f"({a}, {o}, '{t.sentiment.tag}')")
    return " ".join(tokens) + SEPARATOR + "[" + ", ".join(parts) + "]"


def count_stats(examples: Iterable[Example]) -> CorpusStats:
    stats = CorpusStats()
    for ex in examples:
        stats.sentence_count += 1
        for t in ex.triplets:
            if t.sentiment == Sentiment.POSITIVE:
                stats.pos_count += 1
            elif t.sentiment == Sentiment.NEUTRAL:
                stats.neu_count += 1
            else:
                stats.neg_count += 1
    return stats


def read_examples(path: str | Path, vocab: Vocab | None = None,
                  max_len: int | None = None) -> list[Example]:
    path = Path(path)
    examples = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                sentence, triplets = parse_line(line, vocab, lineno, max_len)
            except ParseError as exc:
                raise ParseError(exc.message, lineno, path) from None
            except LengthError as exc:
                raise LengthError(f"{path}:{lineno}: {exc}") from None
            examples.append(Example(sentence, tuple(triplets)))
    return examples


def load_split(path: str | Path, vocab: Vocab | None = None,
               max_len: int | None = None) -> tuple[list[Example], CorpusStats]:
    examples = read_examples(path, vocab, max_len)
    return examples, count_stats(examples)


def encode_examples(examples: Iterable[Example], vocab: Vocab) -> list[Example]:
    return [Example(Sentence(ex.sentence.tokens, vocab.encode(ex.sentence.tokens)), ex.triplets)
            for ex in examples]


def write_examples(path: str | Path, rows: Iterable[tuple[Sequence[str], Iterable[Triplet]]]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for tokens, triplets in rows:
            fh.write(format_line(tokens, triplets) + "\n")


def stats_table(rows: Sequence[tuple[str, CorpusStats]]) -> str:
    """Aligned text table of corpus statistics."""
    header = ("split", "sentences", "pos", "neu", "neg")
    body = [(name, *map(str, s.as_tuple())) for name, s in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = []
    for r in [header, *body]:
        lines.append("  ".join([r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]))
    return "\n".join(lines)
