"""Corpus ingestion, vocabularies, visual-feature I/O, and synthetic data.

File conventions: corpora are UTF-8, one pre-tokenized lowercased sentence
per line with space-separated tokens. Visual features use the binary MMTF
format (magic "MMTF"; u32 count, regions, dim; little-endian f32 payload in
sample-major, region-major order). Vocab files hold one token per line,
line number = id - 4, the four specials being implicit.
"""

from __future__ import annotations

import hashlib
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .rng import derive_rng
from .validation import TokenSeq, check_corpus, check_token_seq

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

FEATURE_MAGIC = b"MMTF"


@dataclass(frozen=True)
class Vocab:
    """Dense token <-> id bijection with fixed special ids 0..3."""

    token_of: tuple[str, ...]

    def __post_init__(self):
        if self.token_of[:4] != SPECIALS:
            raise DataError("vocab must start with the four specials")
        if len(set(self.token_of)) != len(self.token_of):
            raise DataError("vocab contains duplicate tokens")
        object.__setattr__(
            self, "_id_of", {t: i for i, t in enumerate(self.token_of)}
        )

    def __len__(self) -> int:
        return len(self.token_of)

    def __contains__(self, token: str) -> bool:
        return token in self._id_of

    def id(self, token: str) -> int:
        return self._id_of.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self._id_of.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> TokenSeq:
        return tuple(self.token_of[i] for i in ids)

    def decode_clean(self, ids: Iterable[int]) -> TokenSeq:
        """Decode, dropping pad/bos/eos (kept: <unk>)."""
        return tuple(
            self.token_of[i] for i in ids if i not in (PAD_ID, BOS_ID, EOS_ID)
        )

    def digest(self) -> str:
        payload = "\n".join(self.token_of[4:]).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.token_of[4:]:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh]
        if any(not t for t in tokens):
            raise DataError(f"{path}: empty token line in vocab file")
        return cls(SPECIALS + tuple(tokens))


def build_vocab(sentences: Sequence[Sequence[str]], min_freq: int = 1) -> Vocab:
    """Frequency-thresholded vocab, ordered by (freq desc, token asc)."""
    if min_freq < 1:
        raise ConfigError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for sent in sentences:
        counts.update(sent)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq and t not in SPECIALS),
        key=lambda t: (-counts[t], t),
    )
    return Vocab(SPECIALS + tuple(kept))


def read_corpus(path: str | Path) -> list[TokenSeq]:
    sentences: list[TokenSeq] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                raise DataError(f"{path}:{lineno}: empty line")
            sentences.append(check_token_seq(line.split(" "), f"{path}:{lineno}"))
    return sentences


def write_corpus(path: str | Path, sentences: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(" ".join(sent) + "\n")


def read_parallel(
    src_path: str | Path, tgt_path: str | Path
) -> list[tuple[TokenSeq, TokenSeq]]:
    """Read aligned source/target corpora; line counts must match."""
    src = read_corpus(src_path)
    tgt = read_corpus(tgt_path)
    if not src:
        raise DataError(f"{src_path}: empty corpus")
    if len(src) != len(tgt):
        raise DataError(
            f"line count mismatch: {src_path} has {len(src)}, {tgt_path} has {len(tgt)}"
        )
    return list(zip(src, tgt))


def write_features(path: str | Path, features: np.ndarray) -> None:
    """Write an (N, r, d) float32 tensor in MMTF format."""
    arr = np.asarray(features, dtype=np.float32)
    if arr.ndim != 3:
        raise DataError(f"features must be 3-d (samples, regions, dim), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("features contain non-finite values")
    count, regions, dim = arr.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", count, regions, dim))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def read_features(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURE_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        header = fh.read(12)
        if len(header) != 12:
            raise DataError(f"{path}: truncated header")
        count, regions, dim = struct.unpack("<III", header)
        payload = fh.read()
    expected = count * regions * dim * 4
    if len(payload) != expected:
        raise DataError(
            f"{path}: truncated payload ({len(payload)} bytes, expected {expected})"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(count, regions, dim).copy()
    if not np.isfinite(arr).all():
        raise DataError(f"{path}: non-finite feature values")
    return arr


@dataclass(frozen=True)
class Triple:
    """One training example: clean source, noisy source, target, features."""

    x_clean: TokenSeq
    x_noisy: TokenSeq
    y: TokenSeq
    features: np.ndarray | None = None

    def __post_init__(self):
        if len(self.x_clean) != len(self.x_noisy):
            raise DataError(
                "clean/noisy length mismatch (noise is substitution-only): "
                f"{len(self.x_clean)} vs {len(self.x_noisy)}"
            )


def make_triples(
    clean: Sequence[Sequence[str]],
    noisy: Sequence[Sequence[str]],
    targets: Sequence[Sequence[str]],
    features: np.ndarray | None = None,
) -> list[Triple]:
    if not (len(clean) == len(noisy) == len(targets)):
        raise DataError("clean/noisy/target corpora must have equal length")
    if features is not None and len(features) != len(clean):
        raise DataError("features count does not match corpus size")
    return [
        Triple(
            tuple(c), tuple(n), tuple(t),
            None if features is None else features[i],
        )
        for i, (c, n, t) in enumerate(zip(clean, noisy, targets))
    ]


# --- synthetic grounded corpus -------------------------------------------

COLORS = ("red", "blue", "green", "gold")
SHAPES = ("cube", "ball", "ring", "cone")
CONNECTIVE = "and"

TARGET_LEXICON = {
    "red": "rouge", "blue": "bleu", "green": "vert", "gold": "dore",
    "cube": "bloc", "ball": "balle", "ring": "anneau", "cone": "pion",
    CONNECTIVE: "et",
}

FEATURE_DIM = len(COLORS) * len(SHAPES)


def attribute_embedding(color: str, shape: str) -> np.ndarray:
    """Fixed orthogonal (one-hot) embedding of a (color, shape) pair."""
    vec = np.zeros(FEATURE_DIM, dtype=np.float32)
    vec[COLORS.index(color) * len(SHAPES) + SHAPES.index(shape)] = 1.0
    return vec


def gen_synthetic_grounded(
    num_sentences: int,
    num_objects_range: tuple[int, int] = (1, 3),
    seed: int = 0,
    regions: int = 4,
    jitter: float = 0.05,
) -> tuple[list[TokenSeq], list[TokenSeq], np.ndarray]:
    """Generate a grounded toy corpus of colored-shape descriptions.

    Each sentence lists 1..3 objects as "<color> <shape>" joined by "and";
    the target maps tokens through a fixed bijective lexicon with the word
    order reversed inside each pair. One feature region per object holds its
    attribute embedding plus Gaussian jitter; zero rows pad to ``regions``.
    """
    lo, hi = num_objects_range
    if not (1 <= lo <= hi):
        raise ConfigError("num_objects_range must satisfy 1 <= lo <= hi")
    if hi > regions:
        raise ConfigError("more objects than feature regions")
    if num_sentences < 1:
        raise ConfigError("num_sentences must be >= 1")
    src: list[TokenSeq] = []
    tgt: list[TokenSeq] = []
    feats = np.zeros((num_sentences, regions, FEATURE_DIM), dtype=np.float32)
    for i in range(num_sentences):
        rng = derive_rng(seed, "synth", i)
        count = int(rng.integers(lo, hi + 1))
        src_tokens: list[str] = []
        tgt_tokens: list[str] = []
        for j in range(count):
            color = COLORS[int(rng.integers(len(COLORS)))]
            shape = SHAPES[int(rng.integers(len(SHAPES)))]
            if j > 0:
                src_tokens.append(CONNECTIVE)
                tgt_tokens.append(TARGET_LEXICON[CONNECTIVE])
            src_tokens += [color, shape]
            tgt_tokens += [TARGET_LEXICON[shape], TARGET_LEXICON[color]]
            region = attribute_embedding(color, shape)
            if jitter > 0:
                region = region + rng.normal(0.0, jitter, FEATURE_DIM)
            feats[i, j] = region.astype(np.float32)
        src.append(tuple(src_tokens))
        tgt.append(tuple(tgt_tokens))
    return src, tgt, feats
