"""Input validation helpers for token sequences and corpora."""

from __future__ import annotations

from collections.abc import Sequence

from .errors import DataError

TokenSeq = tuple[str, ...]


def check_token_seq(tokens: Sequence[str], where: str = "sentence") -> TokenSeq:
    """Validate one tokenized sentence: non-empty tokens, no whitespace inside."""
    toks = tuple(tokens)
    for t in toks:
        if not t:
            raise DataError(f"{where}: empty token")
        if any(c.isspace() for c in t):
            raise DataError(f"{where}: token {t!r} contains whitespace")
    return toks


def check_corpus(corpus: Sequence[Sequence[str]], where: str = "corpus") -> list[TokenSeq]:
    return [check_token_seq(s, f"{where}[{i}]") for i, s in enumerate(corpus)]


def check_same_length(a: Sequence, b: Sequence, what: str = "corpora") -> None:
    if len(a) != len(b):
        raise DataError(f"{what} length mismatch: {len(a)} vs {len(b)}")
