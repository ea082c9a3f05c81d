"""Beam search, batched greedy decoding, and attention extraction."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import torch

from ..corpus import BOS_ID, EOS_ID
from ..errors import ConfigError, DataError
from .network import DualDecoderModel, pad_batch, pin_single_thread

StepFn = Callable[[list[tuple[int, ...]]], np.ndarray]


def beam_search_core(
    step_fn: StepFn,
    *,
    eos_id: int = EOS_ID,
    beam_size: int = 4,
    max_len: int = 32,
) -> tuple[tuple[int, ...], float]:
    """Length-normalized beam search over a next-token log-prob oracle.

    ``step_fn`` maps a list of prefixes (without BOS) to an array of
    next-token log-probabilities, one row per prefix. At every step the
    top ``beam_size`` candidates by cumulative log-probability are kept;
    hypotheses that emit EOS occupy their slot as finished. The best
    finished hypothesis by score/length wins; if nothing finished within
    ``max_len`` generated tokens, the best unfinished one is returned.
    Ties prefer the lexicographically smaller token sequence.
    """
    if beam_size < 1 or max_len < 1:
        raise ConfigError("beam_size and max_len must be >= 1")
    beams: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    finished: list[tuple[tuple[int, ...], float, int]] = []
    for _ in range(max_len):
        if not beams:
            break
        logprobs = step_fn([tokens for tokens, _ in beams])
        candidates: list[tuple[float, tuple[int, ...]]] = []
        for (tokens, logp), row in zip(beams, logprobs):
            for tok, lp in enumerate(row):
                candidates.append((logp + float(lp), tokens + (int(tok),)))
        candidates.sort(key=lambda c: (-c[0], c[1]))
        beams = []
        for total, tokens in candidates[:beam_size]:
            if tokens[-1] == eos_id:
                finished.append((tokens[:-1], total, len(tokens)))
            else:
                beams.append((tokens, total))
    pool = [(logp / length, tokens) for tokens, logp, length in finished]
    if not pool:
        pool = [(logp / len(tokens), tokens) for tokens, logp in beams if tokens]
    if not pool:
        raise DataError("beam search produced no hypotheses")
    best = min(pool, key=lambda p: (-p[0], p[1]))
    return best[1], best[0]


def exhaustive_search(
    step_fn: StepFn,
    *,
    eos_id: int = EOS_ID,
    vocab_size: int,
    max_len: int = 4,
) -> tuple[tuple[int, ...], float]:
    """Enumerate every sequence up to max_len; the oracle beam search checks against."""
    finished: list[tuple[float, tuple[int, ...]]] = []
    unfinished: list[tuple[float, tuple[int, ...]]] = []

    def walk(tokens: tuple[int, ...], logp: float) -> None:
        if len(tokens) == max_len:
            if tokens:
                unfinished.append((logp / len(tokens), tokens))
            return
        row = step_fn([tokens])[0]
        for tok in range(vocab_size):
            total = logp + float(row[tok])
            if tok == eos_id:
                finished.append((total / (len(tokens) + 1), tokens))
            else:
                walk(tokens + (tok,), total)

    walk((), 0.0)
    pool = finished or unfinished
    best = min(pool, key=lambda p: (-p[0], p[1]))
    return best[1], best[0]


def model_step_fn(
    model: DualDecoderModel,
    src_ids: list[int],
    features: torch.Tensor | None,
    decoder: str,
) -> StepFn:
    """Bind a single-sentence next-token oracle to a trained model."""
    memory = model.encode_ids(src_ids).unsqueeze(0)
    cross_mask = torch.ones(1, 1, 1, len(src_ids), dtype=torch.bool)
    visual = model.project_visual(None if features is None else features.unsqueeze(0))

    def step(prefixes: list[tuple[int, ...]]) -> np.ndarray:
        k = len(prefixes)
        width = 1 + max(len(p) for p in prefixes)
        rows = torch.zeros(k, width, dtype=torch.long)
        for i, prefix in enumerate(prefixes):
            rows[i, 0] = BOS_ID
            if prefix:
                rows[i, 1: 1 + len(prefix)] = torch.tensor(prefix, dtype=torch.long)
        with torch.no_grad():
            out = model.step_logprobs(
                decoder,
                memory.expand(k, -1, -1),
                cross_mask.expand(k, -1, -1, -1),
                rows,
                None if visual is None else visual.expand(k, -1, -1),
            )
        return out.double().numpy()

    return step


def beam_search(
    model: DualDecoderModel,
    src_ids: list[int],
    *,
    decoder: str = "mt",
    features: torch.Tensor | None = None,
    beam_size: int = 4,
    max_len: int = 32,
) -> list[int]:
    """Decode one sentence; returns token ids without specials."""
    if not src_ids:
        raise DataError("cannot decode an empty input")
    pin_single_thread()
    model.eval()
    step = model_step_fn(model, src_ids, features, decoder)
    tokens, _ = beam_search_core(step, beam_size=beam_size, max_len=max_len)
    return list(tokens)


def greedy_decode_batch(
    model: DualDecoderModel,
    src_ids: list[list[int]],
    features: torch.Tensor | None,
    *,
    decoder: str = "mt",
    max_len: int = 32,
) -> list[list[int]]:
    """Greedy decode a batch of sentences in parallel (equals beam_size=1)."""
    if not src_ids:
        return []
    pin_single_thread()
    model.eval()
    batch = len(src_ids)
    src, src_mask = pad_batch(src_ids)
    with torch.no_grad():
        memory = model.encode(src, src_mask)
        visual = model.project_visual(features)
        rows = torch.full((batch, 1), BOS_ID, dtype=torch.long)
        alive = torch.ones(batch, dtype=torch.bool)
        for _ in range(max_len):
            logprobs = model.step_logprobs(decoder, memory, src_mask, rows, visual)
            nxt = logprobs.argmax(dim=-1)
            nxt = torch.where(alive, nxt, torch.full_like(nxt, EOS_ID))
            rows = torch.cat([rows, nxt.unsqueeze(1)], dim=1)
            alive = alive & (nxt != EOS_ID)
            if not alive.any():
                break
    outputs: list[list[int]] = []
    for i in range(batch):
        seq: list[int] = []
        for tok in rows[i, 1:].tolist():
            if tok == EOS_ID:
                break
            seq.append(tok)
        outputs.append(seq)
    return outputs


def attention_dump(
    model: DualDecoderModel,
    src_ids: list[int],
    tgt_ids: list[int],
    *,
    features: torch.Tensor | None = None,
    decoder: str = "mt",
) -> dict[str, list[np.ndarray]]:
    """Per-layer text (and visual) attention when teacher-forcing a target.

    Row t of each matrix is the attention used while generating target
    token t; every row sums to 1.
    """
    if not src_ids or not tgt_ids:
        raise DataError("attention dump needs non-empty source and target")
    model.eval()
    memory = model.encode_ids(src_ids).unsqueeze(0)
    cross_mask = torch.ones(1, 1, 1, len(src_ids), dtype=torch.bool)
    visual = model.project_visual(None if features is None else features.unsqueeze(0))
    dec_input = torch.tensor([[BOS_ID] + list(tgt_ids)], dtype=torch.long)
    with torch.no_grad():
        _, text_maps, visual_maps = model._decoder(decoder)(
            dec_input, memory, visual, cross_mask, collect_attn=True
        )
    t = len(tgt_ids)
    return {
        "text": [m[0, :t, :].double().numpy() for m in text_maps],
        "visual": [m[0, :t, :].double().numpy() for m in visual_maps],
    }
