"""Translation and correction scoring.

chrF is a character n-gram F-score computed over whitespace-stripped
strings (the hermetic stand-in for dictionary-based MT metrics). Correction
quality is scored span-based: token-level alignments are turned into edit
sets and compared with F-beta (beta=0.5 weights precision over recall).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DataError
from .validation import TokenSeq

EDIT_KINDS = ("insert", "delete", "substitute")


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i: i + n] for i in range(len(text) - n + 1))


def chrf(hypothesis: str, reference: str, n_max: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F-score in [0, 1].

    For each order n, clipped precision and recall are computed over the
    space-stripped strings; orders with an empty denominator are excluded
    from the average. Returns 0 when the F denominator vanishes.
    """
    hyp = "".join(hypothesis.split())
    ref = "".join(reference.split())
    if not ref:
        raise DataError("chrf: empty reference")
    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, n_max + 1):
        hyp_counts = _char_ngrams(hyp, n)
        ref_counts = _char_ngrams(ref, n)
        overlap = sum((hyp_counts & ref_counts).values())
        hyp_total = sum(hyp_counts.values())
        ref_total = sum(ref_counts.values())
        if hyp_total > 0:
            precisions.append(overlap / hyp_total)
        if ref_total > 0:
            recalls.append(overlap / ref_total)
    precision = sum(precisions) / len(precisions) if precisions else 0.0
    recall = sum(recalls) / len(recalls) if recalls else 0.0
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


def corpus_chrf(
    hypotheses: Sequence[str], references: Sequence[str],
    n_max: int = 6, beta: float = 2.0,
) -> tuple[float, list[float]]:
    """Mean sentence chrF plus the per-sentence scores."""
    if len(hypotheses) != len(references):
        raise DataError("hypothesis/reference count mismatch")
    if not references:
        raise DataError("empty reference corpus")
    scores = [chrf(h, r, n_max, beta) for h, r in zip(hypotheses, references)]
    return sum(scores) / len(scores), scores


@dataclass(frozen=True, order=True)
class Edit:
    """A span edit on the noisy source: [start, end) -> replacement.

    insert has start == end; delete has an empty replacement. An insert's
    replacement may hold several space-joined tokens (all tokens added at
    one gap form a single edit so that edit sets stay order-free).
    """

    start: int
    end: int
    replacement: str
    kind: str

    def __post_init__(self):
        if self.kind not in EDIT_KINDS:
            raise DataError(f"unknown edit kind {self.kind!r}")
        if self.start < 0 or self.end < self.start:
            raise DataError(f"bad edit span [{self.start}, {self.end})")
        if self.kind == "insert" and self.start != self.end:
            raise DataError("insert edits must have start == end")
        if self.kind == "delete" and self.replacement:
            raise DataError("delete edits must have an empty replacement")
        if self.kind in ("insert", "substitute") and not self.replacement:
            raise DataError(f"{self.kind} edit needs a replacement")


EditSet = frozenset[Edit]

# Tie-break priority when several ops lie on a minimal-cost alignment path.
_OP_PRIORITY = ("substitute", "delete", "insert", "copy")


def _suffix_costs(a: Sequence[str], b: Sequence[str]) -> list[list[int]]:
    la, lb = len(a), len(b)
    dp = [[0] * (lb + 1) for _ in range(la + 1)]
    for j in range(lb + 1):
        dp[la][j] = lb - j
    for i in range(la + 1):
        dp[i][lb] = la - i
    for i in range(la - 1, -1, -1):
        for j in range(lb - 1, -1, -1):
            dp[i][j] = min(
                dp[i + 1][j + 1] + (0 if a[i] == b[j] else 1),
                dp[i + 1][j] + 1,
                dp[i][j + 1] + 1,
            )
    return dp


def align_ops(noisy: Sequence[str], other: Sequence[str]) -> list[tuple[str, int, int]]:
    """Canonical minimal-cost alignment as (op, i, j) steps, left to right.

    Ties between ops on minimal paths prefer substitute > delete > insert,
    applied during a forward walk so edits land as far left as possible.
    """
    a, b = list(noisy), list(other)
    dp = _suffix_costs(a, b)
    ops: list[tuple[str, int, int]] = []
    i = j = 0
    while i < len(a) or j < len(b):
        best = None
        for op in _OP_PRIORITY:
            if op == "substitute" and i < len(a) and j < len(b) and a[i] != b[j]:
                total = 1 + dp[i + 1][j + 1]
            elif op == "delete" and i < len(a):
                total = 1 + dp[i + 1][j]
            elif op == "insert" and j < len(b):
                total = 1 + dp[i][j + 1]
            elif op == "copy" and i < len(a) and j < len(b) and a[i] == b[j]:
                total = dp[i + 1][j + 1]
            else:
                continue
            if total == dp[i][j]:
                best = op
                break
        assert best is not None
        ops.append((best, i, j))
        if best == "insert":
            j += 1
        elif best == "delete":
            i += 1
        else:
            i += 1
            j += 1
    return ops


def extract_edits(noisy: Sequence[str], other: Sequence[str]) -> EditSet:
    """Edit set turning ``noisy`` into ``other`` under the canonical alignment."""
    edits: list[Edit] = []
    pending_insert: list[str] | None = None
    pending_pos = -1

    def flush():
        nonlocal pending_insert
        if pending_insert is not None:
            edits.append(Edit(pending_pos, pending_pos, " ".join(pending_insert), "insert"))
            pending_insert = None

    for op, i, j in align_ops(noisy, other):
        if op == "insert":
            if pending_insert is not None and pending_pos == i:
                pending_insert.append(other[j])
            else:
                flush()
                pending_insert = [other[j]]
                pending_pos = i
            continue
        flush()
        if op == "substitute":
            edits.append(Edit(i, i + 1, other[j], "substitute"))
        elif op == "delete":
            edits.append(Edit(i, i + 1, "", "delete"))
    flush()
    return frozenset(edits)


def apply_edits(noisy: Sequence[str], edits: Iterable[Edit]) -> TokenSeq:
    """Apply an edit set to the noisy sentence (round-trip inverse of extract)."""
    by_pos: dict[int, list[Edit]] = {}
    inserts: dict[int, Edit] = {}
    for e in edits:
        if e.kind == "insert":
            if e.start in inserts:
                raise DataError(f"two insert edits at position {e.start}")
            inserts[e.start] = e
        else:
            if e.end > len(noisy):
                raise DataError(f"edit span [{e.start}, {e.end}) outside sentence")
            if e.start in by_pos:
                raise DataError(f"overlapping edits at position {e.start}")
            by_pos[e.start] = [e]
    out: list[str] = []
    for i in range(len(noisy) + 1):
        if i in inserts:
            out.extend(inserts[i].replacement.split(" "))
        if i == len(noisy):
            break
        ops = by_pos.get(i)
        if ops is None:
            out.append(noisy[i])
        elif ops[0].kind == "substitute":
            out.append(ops[0].replacement)
        # delete: emit nothing
    return tuple(out)


def fbeta(precision: float, recall: float, beta: float) -> float:
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


def correction_f(
    sys_edits: EditSet, gold_edits: EditSet, beta: float = 0.5
) -> tuple[float, float, float]:
    """Precision, recall and F-beta between edit sets (0/0 counts as 1)."""
    tp = len(sys_edits & gold_edits)
    precision = tp / len(sys_edits) if sys_edits else 1.0
    recall = tp / len(gold_edits) if gold_edits else 1.0
    return precision, recall, fbeta(precision, recall, beta)


def corpus_correction_f(
    pairs: Iterable[tuple[EditSet, EditSet]], beta: float = 0.5
) -> tuple[float, float, float]:
    """Aggregate TP/FP/FN over sentences, then compute P, R, F."""
    tp = fp = fn = 0
    for sys_edits, gold_edits in pairs:
        hits = len(sys_edits & gold_edits)
        tp += hits
        fp += len(sys_edits) - hits
        fn += len(gold_edits) - hits
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall, fbeta(precision, recall, beta)
