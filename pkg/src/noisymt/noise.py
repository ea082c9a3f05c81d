"""Constrained realistic noise over tokenized corpora.

Three substitution-only noise types: in-vocabulary words at small edit
distance, homophones from a pronouncing lexicon, and single-character
QWERTY-adjacent typos. Only tokens longer than two characters that contain
at least one letter are ever touched, and every random decision is keyed
by (seed, sentence index) so corpus injection is order-independent.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError, DataError
from .phonlex import HomophoneIndex, build_homophone_index, load_bundled_lexicon
from .rng import derive_key, derive_rng
from .validation import TokenSeq, check_corpus, check_same_length, check_token_seq

NOISE_TYPES = ("edit", "homophone", "keyboard")
UNK_SURFACE = "[UNK]"

# Staggered QWERTY 8-neighbourhood approximation, letters only; symmetric.
QWERTY_ADJACENCY: dict[str, frozenset[str]] = {
    k: frozenset(v)
    for k, v in {
        "q": "wa", "w": "qeas", "e": "wrsd", "r": "etdf", "t": "ryfg",
        "y": "tugh", "u": "yihj", "i": "uojk", "o": "ipkl", "p": "ol",
        "a": "qwsz", "s": "adwezx", "d": "sferxc", "f": "dgrtcv",
        "g": "fhtyvb", "h": "gjyubn", "j": "hkuinm", "k": "jliom",
        "l": "kpo", "z": "asx", "x": "zcsd", "c": "xvdf", "v": "cbfg",
        "b": "vngh", "n": "bmhj", "m": "njk",
    }.items()
}


@dataclass(frozen=True)
class KeyboardLayout:
    """Symmetric letter adjacency for keyboard-typo noise."""

    adjacency: Mapping[str, frozenset[str]]

    def __post_init__(self):
        for key, neigh in self.adjacency.items():
            if len(key) != 1 or not key.islower():
                raise ConfigError(f"layout key {key!r} is not a lowercase letter")
            if key in neigh:
                raise ConfigError(f"letter {key!r} adjacent to itself")
            for other in neigh:
                if key not in self.adjacency.get(other, frozenset()):
                    raise ConfigError(f"adjacency not symmetric: {key!r} -> {other!r}")


QWERTY_LAYOUT = KeyboardLayout(QWERTY_ADJACENCY)


@dataclass(frozen=True)
class Substitution:
    pos: int
    orig: str
    new: str


@dataclass(frozen=True)
class NoiseRecord:
    """Per-sentence provenance of substitutions."""

    sentence_index: int
    noise_type: str
    subs: tuple[Substitution, ...] = ()

    def __post_init__(self):
        if self.noise_type not in NOISE_TYPES + ("none",):
            raise ConfigError(f"unknown noise type {self.noise_type!r}")
        if (self.noise_type == "none") != (len(self.subs) == 0):
            raise DataError("noise_type 'none' iff subs is empty")
        positions = [s.pos for s in self.subs]
        if positions != sorted(set(positions)):
            raise DataError("substitution positions must be strictly increasing")
        for s in self.subs:
            if len(s.orig) <= 2:
                raise DataError(f"substituted token {s.orig!r} has length <= 2")

    def to_json(self) -> dict:
        return {
            "idx": self.sentence_index,
            "type": self.noise_type,
            "subs": [{"pos": s.pos, "orig": s.orig, "new": s.new} for s in self.subs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseRecord":
        return cls(
            sentence_index=obj["idx"],
            noise_type=obj["type"],
            subs=tuple(Substitution(s["pos"], s["orig"], s["new"]) for s in obj["subs"]),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """How much and what kind of noise to inject.

    ``n`` caps the substituted words per sentence; ``type_weights`` orders
    probabilities as (edit, homophone, keyboard) and defaults to uniform.
    """

    n: int
    seed: int
    max_edit_distance: int = 1
    type_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("n must be >= 0")
        if self.max_edit_distance < 1:
            raise ConfigError("max_edit_distance must be >= 1")
        if len(self.type_weights) != 3 or any(w < 0 for w in self.type_weights):
            raise ConfigError("type_weights must be three non-negative reals")
        if abs(sum(self.type_weights) - 1.0) > 1e-9:
            raise ConfigError("type_weights must sum to 1")


def eligible_positions(tokens: Sequence[str]) -> list[int]:
    """Indices of tokens long enough (and wordy enough) to perturb."""
    return [
        i for i, t in enumerate(tokens)
        if len(t) > 2 and any(c.isalpha() for c in t)
    ]


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert/delete/substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _one_edit_neighbourhood(word: str, alphabet: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for i in range(len(word) + 1):
        for c in alphabet:
            out.add(word[:i] + c + word[i:])
    for i in range(len(word)):
        out.add(word[:i] + word[i + 1:])
        for c in alphabet:
            out.add(word[:i] + c + word[i + 1:])
    out.discard(word)
    return out


def edit_distance_candidates(word: str, vocab: Iterable[str], max_dist: int = 1) -> set[str]:
    """All vocabulary words within ``max_dist`` unit edits of ``word``."""
    if not word:
        raise DataError("cannot perturb an empty word")
    if max_dist < 1:
        raise ConfigError("max_dist must be >= 1")
    vocab_set = vocab if isinstance(vocab, (set, frozenset)) else set(vocab)
    if max_dist == 1:
        alphabet = {c for v in vocab_set for c in v}
        return _one_edit_neighbourhood(word, alphabet) & vocab_set
    return {
        v for v in vocab_set
        if v != word
        and abs(len(v) - len(word)) <= max_dist
        and levenshtein(word, v) <= max_dist
    }


def keyboard_variants(word: str, layout: KeyboardLayout = QWERTY_LAYOUT) -> set[str]:
    """All strings obtained by swapping exactly one letter for an adjacent key."""
    out: set[str] = set()
    for i, ch in enumerate(word):
        for adj in layout.adjacency.get(ch, ()):
            out.add(word[:i] + adj + word[i + 1:])
    return out


def homophone_candidates(word: str, index: HomophoneIndex) -> set[str]:
    """Words sharing a stress-stripped pronunciation with ``word``."""
    return set(index.candidates(word))


@dataclass
class NoiseResources:
    """Read-only lookup resources shared by all sentences."""

    vocab: frozenset[str]
    homophones: HomophoneIndex | None
    layout: KeyboardLayout = QWERTY_LAYOUT
    _alphabet: frozenset[str] = field(init=False, repr=False)

    def __post_init__(self):
        self._alphabet = frozenset(c for v in self.vocab for c in v)

    def candidates(self, word: str, noise_type: str, spec: NoiseSpec) -> list[str]:
        """Sorted candidate substitutes of the given type (sorted for determinism)."""
        if noise_type == "edit":
            if spec.max_edit_distance == 1:
                cands = _one_edit_neighbourhood(word, self._alphabet) & self.vocab
            else:
                cands = edit_distance_candidates(word, self.vocab, spec.max_edit_distance)
        elif noise_type == "homophone":
            if self.homophones is None:
                raise ConfigError("homophone noise requires a pronouncing lexicon")
            cands = self.homophones.candidates(word)
        elif noise_type == "keyboard":
            cands = keyboard_variants(word, self.layout)
        else:
            raise ConfigError(f"unknown noise type {noise_type!r}")
        return sorted(cands)


def perturb_sentence(
    tokens: Sequence[str],
    noise_type: str,
    spec: NoiseSpec,
    resources: NoiseResources,
    rng: np.random.Generator,
    sentence_index: int = 0,
) -> tuple[TokenSeq, NoiseRecord]:
    """Apply one noise type to up to ``spec.n`` eligible positions.

    Positions are drawn uniformly without replacement; a position whose
    candidate set is empty is skipped. Output length always equals input
    length. Returns the (possibly unchanged) sentence and its record.
    """
    if noise_type not in NOISE_TYPES:
        raise ConfigError(f"unknown noise type {noise_type!r}")
    toks = list(check_token_seq(tokens))
    eligible = eligible_positions(toks)
    subs: list[Substitution] = []
    if spec.n > 0 and eligible:
        order = rng.permutation(len(eligible))[: spec.n]
        for k in order:
            pos = eligible[int(k)]
            cands = resources.candidates(toks[pos], noise_type, spec)
            if not cands:
                continue
            new = cands[int(rng.integers(len(cands)))]
            subs.append(Substitution(pos, toks[pos], new))
            toks[pos] = new
    if not subs:
        return tuple(tokens), NoiseRecord(sentence_index, "none")
    subs.sort(key=lambda s: s.pos)
    record = NoiseRecord(sentence_index, noise_type, tuple(subs))
    return tuple(toks), record


def _draw_noise_type(spec: NoiseSpec, rng: np.random.Generator) -> str:
    u = rng.random()
    acc = 0.0
    for name, w in zip(NOISE_TYPES, spec.type_weights):
        acc += w
        if u < acc:
            return name
    return NOISE_TYPES[-1]


def _inject_one(
    i: int, tokens: Sequence[str], spec: NoiseSpec, resources: NoiseResources
) -> tuple[TokenSeq, NoiseRecord]:
    rng = derive_rng(spec.seed, "noise", i)
    noise_type = _draw_noise_type(spec, rng)
    return perturb_sentence(tokens, noise_type, spec, resources, rng, sentence_index=i)


def inject_corpus(
    corpus: Sequence[Sequence[str]],
    spec: NoiseSpec,
    resources: NoiseResources,
    workers: int = 1,
) -> tuple[list[TokenSeq], list[NoiseRecord]]:
    """Noise every sentence, drawing its type from ``spec.type_weights``.

    Per-sentence RNG streams are keyed by (seed, index), so the result is
    identical for any worker count and any processing order.
    """
    if not corpus:
        raise DataError("cannot inject an empty corpus")
    if spec.type_weights[1] > 0 and resources.homophones is None:
        raise ConfigError("homophone noise requested but no lexicon available")
    sentences = check_corpus(corpus)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda ix: _inject_one(ix[0], ix[1], spec, resources),
                         enumerate(sentences))
            )
    else:
        results = [_inject_one(i, s, spec, resources) for i, s in enumerate(sentences)]
    noisy = [r[0] for r in results]
    records = [r[1] for r in results]
    return noisy, records


def mask_unk(tokens: Sequence[str], k: int, seed: int) -> TokenSeq:
    """Replace min(k, #eligible) tokens longer than two chars with '[UNK]'."""
    if k < 0:
        raise ConfigError("k must be >= 0")
    toks = list(check_token_seq(tokens))
    eligible = [i for i, t in enumerate(toks) if len(t) > 2]
    if k == 0 or not eligible:
        return tuple(toks)
    rng = derive_rng(seed, "unk")
    for j in rng.permutation(len(eligible))[:k]:
        toks[eligible[int(j)]] = UNK_SURFACE
    return tuple(toks)


def mask_unk_corpus(
    corpus: Sequence[Sequence[str]], k: int, seed: int
) -> list[TokenSeq]:
    return [mask_unk(s, k, derive_key(seed, "unk-corpus", i)) for i, s in enumerate(corpus)]


def mix_clean_noisy(
    clean: Sequence[Sequence[str]],
    noisy: Sequence[Sequence[str]],
    ratio: float,
    seed: int,
) -> tuple[list[TokenSeq], list[bool]]:
    """Per-sentence Bernoulli(ratio) choice of the noisy variant."""
    check_same_length(clean, noisy, "clean/noisy corpora")
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError("ratio must be in [0, 1]")
    mixed: list[TokenSeq] = []
    flags: list[bool] = []
    for i, (c, n) in enumerate(zip(clean, noisy)):
        take_noisy = bool(derive_rng(seed, "mix", i).random() < ratio)
        mixed.append(tuple(n) if take_noisy else tuple(c))
        flags.append(take_noisy)
    return mixed, flags


def write_noise_records(path: str | Path, records: Iterable[NoiseRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def read_noise_records(path: str | Path) -> list[NoiseRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(NoiseRecord.from_json(json.loads(line)))
    return records


class NoiseInjector(BaseEstimator, TransformerMixin):
    """Corpus -> noisy corpus transformer with a scikit-learn interface.

    ``fit`` collects the vocabulary (for edit-distance candidates) and the
    pronouncing resources; ``transform`` injects noise deterministically.
    """

    def __init__(
        self,
        n: int = 2,
        seed: int = 0,
        max_edit_distance: int = 1,
        type_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
        lexicon=None,
        layout: KeyboardLayout = QWERTY_LAYOUT,
        workers: int = 1,
    ):
        self.n = n
        self.seed = seed
        self.max_edit_distance = max_edit_distance
        self.type_weights = type_weights
        self.lexicon = lexicon
        self.layout = layout
        self.workers = workers

    def fit(self, X: Sequence[Sequence[str]], y=None) -> "NoiseInjector":
        sentences = check_corpus(X)
        lexicon = self.lexicon if self.lexicon is not None else load_bundled_lexicon()
        self.resources_ = NoiseResources(
            vocab=frozenset(t for s in sentences for t in s),
            homophones=build_homophone_index(lexicon),
            layout=self.layout,
        )
        return self

    def _spec(self) -> NoiseSpec:
        return NoiseSpec(
            n=self.n,
            seed=self.seed,
            max_edit_distance=self.max_edit_distance,
            type_weights=tuple(self.type_weights),
        )

    def transform(self, X: Sequence[Sequence[str]]) -> list[TokenSeq]:
        noisy, records = self.inject(X)
        return noisy

    def inject(
        self, X: Sequence[Sequence[str]]
    ) -> tuple[list[TokenSeq], list[NoiseRecord]]:
        if not hasattr(self, "resources_"):
            raise ConfigError("NoiseInjector must be fitted before transform")
        return inject_corpus(X, self._spec(), self.resources_, workers=self.workers)
