"""Pronouncing-dictionary parsing and the homophone index.

Parses the CMUdict 0.7b line format (``WORD  PH1 PH2 ...`` with ``WORD(2)``
variant markers and ``;;;`` comments) and builds an index from
stress-stripped phoneme sequences to the words that share them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable

from .errors import DataError

Pronunciation = tuple[str, ...]

_VARIANT_RE = re.compile(r"^(.+)\((\d+)\)$")
_PHONE_RE = re.compile(r"^[A-Z]+[0-2]?$")

BUNDLED_LEXICON = "pronlex-mini.txt"


@dataclass(frozen=True)
class PronLexicon:
    """Lowercased word -> ordered, de-duplicated pronunciations."""

    entries: dict[str, tuple[Pronunciation, ...]]

    def __len__(self) -> int:
        return len(self.entries)

    def pronunciations(self, word: str) -> tuple[Pronunciation, ...]:
        return self.entries.get(word.lower(), ())


@dataclass(frozen=True)
class HomophoneIndex:
    """Stress-stripped pronunciation key -> words; plus each word's keys."""

    key_to_words: dict[Pronunciation, frozenset[str]]
    keys_of: dict[str, tuple[Pronunciation, ...]]

    def candidates(self, word: str) -> frozenset[str]:
        """Words sharing at least one stripped pronunciation with ``word``."""
        word = word.lower()
        found: set[str] = set()
        for key in self.keys_of.get(word, ()):
            found.update(self.key_to_words[key])
        found.discard(word)
        return frozenset(found)


def strip_stress(pron: Iterable[str]) -> Pronunciation:
    """Remove the trailing stress digit (0/1/2) from every phoneme."""
    return tuple(p[:-1] if p and p[-1] in "012" else p for p in pron)


def parse_cmudict(stream: IO[bytes] | IO[str]) -> PronLexicon:
    """Parse a CMUdict 0.7b formatted stream into a lexicon.

    Comment lines starting with ``;;;`` are skipped, ``WORD(2)`` variants
    fold into WORD's pronunciation list, words are lowercased, and entries
    whose first character is not a letter (punctuation entries) are dropped.
    Raises DataError with the line number for entry lines without phonemes.
    """
    entries: dict[str, list[Pronunciation]] = {}
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("latin-1")
        line = raw.strip()
        if not line or line.startswith(";;;"):
            continue
        fields = line.split()
        word, phones = fields[0], fields[1:]
        if not phones:
            raise DataError(f"pronouncing dictionary line {lineno}: no phonemes in {line!r}")
        m = _VARIANT_RE.match(word)
        if m:
            word = m.group(1)
        word = word.lower()
        if not word or not word[0].isalpha():
            continue
        pron = tuple(p.upper() for p in phones)
        for p in pron:
            if not _PHONE_RE.match(p):
                raise DataError(
                    f"pronouncing dictionary line {lineno}: bad phoneme {p!r} in {line!r}"
                )
        bucket = entries.setdefault(word, [])
        if pron not in bucket:
            bucket.append(pron)
    return PronLexicon({w: tuple(ps) for w, ps in entries.items()})


def build_homophone_index(lexicon: PronLexicon) -> HomophoneIndex:
    """Key every word under each of its stress-stripped pronunciations."""
    if not lexicon.entries:
        raise DataError("cannot index an empty lexicon")
    key_to_words: dict[Pronunciation, set[str]] = {}
    keys_of: dict[str, tuple[Pronunciation, ...]] = {}
    for word, prons in lexicon.entries.items():
        keys: list[Pronunciation] = []
        for pron in prons:
            key = strip_stress(pron)
            if key not in keys:
                keys.append(key)
            key_to_words.setdefault(key, set()).add(word)
        keys_of[word] = tuple(keys)
    return HomophoneIndex(
        {k: frozenset(ws) for k, ws in key_to_words.items()},
        keys_of,
    )


def load_bundled_lexicon() -> PronLexicon:
    """Parse the pronouncing lexicon shipped with the package."""
    ref = resources.files("noisymt.data").joinpath(BUNDLED_LEXICON)
    with ref.open("rb") as fh:
        return parse_cmudict(fh)
