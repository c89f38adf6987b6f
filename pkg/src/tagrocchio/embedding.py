"""Tag embeddings: CBOW training over tag sentences, one-hot encoding, persistence."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _cbow
from .data import Poi

DENSE = "dense"
ONE_HOT = "one_hot"
_KINDS = (DENSE, ONE_HOT)


class EmptyVocabularyError(ValueError):
    """No tag in the corpus reaches ``min_count``."""


class ModelFormatError(ValueError):
    """A model file that cannot be parsed."""


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 9
    window: int = 5
    min_count: int = 3
    iterations: int = 1000
    negative_samples: int = 5
    learning_rate_start: float = 0.025
    learning_rate_end: float = 0.0001
    seed: int = 1
    permutations_per_poi: int = 1

    def __post_init__(self) -> None:
        for name in ("dim", "window", "min_count", "iterations", "permutations_per_poi"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")
        if not 0 < self.learning_rate_end <= self.learning_rate_start:
            raise ValueError("need 0 < learning_rate_end <= learning_rate_start")


@dataclass(frozen=True)
class EmbeddingModel:
    kind: str
    dim: int
    vocab: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        frozen = {}
        for tag, vec in self.vocab.items():
            arr = np.array(vec, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise ValueError(f"vector for {tag!r} has shape {arr.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {tag!r} is not finite")
            arr.setflags(write=False)
            frozen[tag] = arr
        object.__setattr__(self, "vocab", MappingProxyType(frozen))

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, tag: object) -> bool:
        return tag in self.vocab

    def tags(self) -> list[str]:
        return list(self.vocab)

    def matrix(self, tags: Sequence[str] | None = None) -> np.ndarray:
        tags = self.tags() if tags is None else tags
        if not tags:
            return np.zeros((0, self.dim))
        return np.stack([self.vocab[t] for t in tags])


def tag_vector(model: EmbeddingModel, tag: str) -> np.ndarray | None:
    """The stored vector of ``tag``, or ``None`` when it is out of vocabulary."""
    return model.vocab.get(tag)


def build_vocab(sentences: Iterable[Sequence[str]], min_count: int) -> list[tuple[str, int]]:
    counts = Counter(t for s in sentences for t in s)
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    # most frequent first, ties alphabetical
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return kept


def _cum_table(counts: Sequence[int], power: float = 0.75, domain: int = 2**31 - 1) -> np.ndarray:
    weights = np.asarray(counts, dtype=np.float64) ** power
    cumulative = np.cumsum(weights) / weights.sum()
    table = np.round(cumulative * domain).astype(np.uint64)
    table[-1] = domain
    return table


def train_cbow(sentences: Sequence[Sequence[str]], config: TrainConfig = TrainConfig()) -> EmbeddingModel:
    """Train dense tag vectors with CBOW and negative sampling.

    Vocabulary is every tag occurring at least ``config.min_count`` times.
    Context words are averaged, the window shrinks uniformly at random per
    position, the learning rate decays linearly over all training positions,
    and only input vectors are kept. Deterministic for a fixed seed and
    sentence order.
    """
    vocab = build_vocab(sentences, config.min_count)
    if not vocab:
        raise EmptyVocabularyError(
            f"no tag occurs at least {config.min_count} times in {len(sentences)} sentences"
        )
    index = {t: i for i, (t, _) in enumerate(vocab)}
    tokens: list[int] = []
    offsets = [0]
    for sentence in sentences:
        tokens.extend(index[t] for t in sentence if t in index)
        offsets.append(len(tokens))

    rng = np.random.default_rng(config.seed)
    syn0 = (rng.random((len(vocab), config.dim)) - 0.5) / config.dim
    syn1neg = np.zeros((len(vocab), config.dim))
    if tokens:
        _cbow.train_epochs(
            syn0,
            syn1neg,
            np.asarray(tokens, dtype=np.int64),
            np.asarray(offsets, dtype=np.int64),
            _cum_table([c for _, c in vocab]),
            config.window,
            config.negative_samples,
            config.iterations,
            config.learning_rate_start,
            config.learning_rate_end,
            config.seed,
        )
    return EmbeddingModel(DENSE, config.dim, {t: syn0[i] for t, i in index.items()})


def encode_one_hot(pois: Iterable[Poi]) -> EmbeddingModel:
    """Orthonormal one-hot vectors over every distinct tag, dimensions in lexicographic tag order."""
    tags = sorted({t for p in pois for t in p.tag_names})
    if not tags:
        raise EmptyVocabularyError("no tags to encode")
    eye = np.eye(len(tags))
    return EmbeddingModel(ONE_HOT, len(tags), {t: eye[i] for i, t in enumerate(tags)})


# ---------------------------------------------------------------- persistence


def save_model(model: EmbeddingModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{model.kind} {model.dim} {len(model)}\n")
        for tag, vec in model.vocab.items():
            fh.write(tag + "".join(f" {float(x)!r}" for x in vec) + "\n")


def load_model(path) -> EmbeddingModel:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    header = lines[0].split()
    if len(header) != 3 or header[0] not in _KINDS:
        raise ModelFormatError(f"{path}:1: bad header {lines[0]!r}, expected 'kind dim vocab_size'")
    kind = header[0]
    try:
        dim, size = int(header[1]), int(header[2])
    except ValueError:
        raise ModelFormatError(f"{path}:1: dim and vocab_size must be integers") from None
    if dim < 1 or size < 0:
        raise ModelFormatError(f"{path}:1: invalid dim or vocab_size")
    body = lines[1:]
    if len(body) < size:
        raise ModelFormatError(f"{path}: truncated, expected {size} vectors, found {len(body)}")
    if any(ln.strip() for ln in body[size:]):
        raise ModelFormatError(f"{path}: more vectors than the header's vocab_size {size}")
    vocab: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(body[:size], 2):
        parts = line.split(" ")
        if len(parts) != dim + 1:
            raise ModelFormatError(f"{path}:{lineno}: expected tag and {dim} components")
        tag = parts[0]
        if not tag or tag in vocab:
            raise ModelFormatError(f"{path}:{lineno}: empty or duplicate tag {tag!r}")
        try:
            values = [float(x) for x in parts[1:]]
        except ValueError:
            raise ModelFormatError(f"{path}:{lineno}: non-numeric component") from None
        if not all(math.isfinite(v) for v in values):
            raise ModelFormatError(f"{path}:{lineno}: non-finite component")
        vocab[tag] = np.array(values)
    if kind == ONE_HOT and size != dim:
        raise ModelFormatError(f"{path}: one_hot model needs dim == vocab_size")
    return EmbeddingModel(kind, dim, vocab)
