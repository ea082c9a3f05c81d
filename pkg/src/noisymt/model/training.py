"""Training loop: Adam with the noam schedule, periodic dev-set selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from ..corpus import Triple, Vocab
from ..errors import ConfigError, DataError, DivergenceError
from ..metrics import corpus_chrf
from ..rng import derive_key, derive_rng
from .checkpoint import save_checkpoint, state_arrays
from .config import ModelConfig
from .decoding import greedy_decode_batch
from .network import (
    DualDecoderModel,
    joint_loss,
    pad_batch,
    pin_single_thread,
    teacher_forcing_batch,
)


def noam_lr(step: int, d_model: int, warmup: int) -> float:
    """lr = d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)."""
    if step < 1:
        raise ConfigError("noam schedule is defined for step >= 1")
    return d_model ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


@dataclass
class EncodedBatch:
    src: torch.Tensor
    src_mask: torch.Tensor
    mt_input: torch.Tensor
    mt_target: torch.Tensor
    cor_input: torch.Tensor | None
    cor_target: torch.Tensor | None
    features: torch.Tensor | None


@dataclass
class EncodedDataset:
    """Triples pre-encoded to id lists (one-time cost, reused every epoch)."""

    src_ids: list[list[int]]
    tgt_ids: list[list[int]]
    cor_ids: list[list[int]]
    features: np.ndarray | None

    def __len__(self) -> int:
        return len(self.src_ids)


def encode_triples(
    triples: Sequence[Triple],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    cor_vocab: Vocab | None,
) -> EncodedDataset:
    if not triples:
        raise DataError("empty dataset")
    feats = None
    if triples[0].features is not None:
        feats = np.stack([t.features for t in triples]).astype(np.float32)
    return EncodedDataset(
        src_ids=[src_vocab.encode(t.x_noisy) for t in triples],
        tgt_ids=[tgt_vocab.encode(t.y) for t in triples],
        cor_ids=[cor_vocab.encode(t.x_clean) for t in triples] if cor_vocab else [],
        features=feats,
    )


def assemble_batch(
    data: EncodedDataset, index: Sequence[int], config: ModelConfig, with_cor: bool
) -> EncodedBatch:
    src, src_mask = pad_batch([data.src_ids[i] for i in index])
    mt_input, mt_target = teacher_forcing_batch([data.tgt_ids[i] for i in index])
    cor_input = cor_target = None
    if with_cor:
        cor_input, cor_target = teacher_forcing_batch([data.cor_ids[i] for i in index])
    features = None
    if config.visual:
        if data.features is None:
            raise DataError("visual model requires feature tensors")
        features = torch.from_numpy(data.features[list(index)])
    return EncodedBatch(src, src_mask, mt_input, mt_target, cor_input, cor_target, features)


def batch_losses(
    model: DualDecoderModel, batch: EncodedBatch, cor_weight: float
) -> tuple[torch.Tensor, torch.Tensor | None]:
    """Per-token mean NLL of each decoder on one batch (cor skipped at weight 0)."""
    memory = model.encode(batch.src, batch.src_mask)
    visual = model.project_visual(batch.features)
    nll_mt, count_mt, _ = model.decoder_nll(
        "mt", memory, batch.src_mask, batch.mt_input, batch.mt_target, visual
    )
    l_mt = nll_mt / count_mt
    l_cor = None
    if cor_weight > 0 and batch.cor_input is not None:
        nll_cor, count_cor, _ = model.decoder_nll(
            "cor", memory, batch.src_mask, batch.cor_input, batch.cor_target, visual
        )
        l_cor = nll_cor / count_cor
    return l_mt, l_cor


@dataclass
class TrainResult:
    best_path: Path
    best_step: int
    best_score: float
    history: list[dict] = field(default_factory=list)
    final_loss: float = math.nan


def _dev_chrf(
    model: DualDecoderModel,
    dev: EncodedDataset,
    tgt_vocab: Vocab,
    references: list[str],
    max_len: int,
) -> float:
    model.eval()
    with torch.no_grad():
        hyp_ids = greedy_decode_batch(
            model, dev.src_ids,
            None if dev.features is None else torch.from_numpy(dev.features),
            decoder="mt", max_len=max_len,
        )
    model.train()
    hyps = [" ".join(tgt_vocab.decode_clean(ids)) for ids in hyp_ids]
    score, _ = corpus_chrf(hyps, references)
    return score


def train_model(
    config: ModelConfig,
    train_triples: Sequence[Triple],
    dev_triples: Sequence[Triple],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    cor_vocab: Vocab | None,
    seed: int,
    steps: int,
    eval_every: int = 200,
    run_dir: str | Path = "runs/train",
    dev_max_len: int = 24,
    meta: dict | None = None,
) -> TrainResult:
    """Train and return the dev-selected best checkpoint.

    Fully deterministic for a given seed: parameter init, batch order and
    dropout all derive from it, and torch stays single-threaded.
    """
    pin_single_thread()
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if config.cor_weight > 0 and not config.has_correction:
        raise ConfigError("cor_weight > 0 requires a correction decoder")

    torch.manual_seed(derive_key(seed, "model-init"))
    model = DualDecoderModel(config)
    model.train()
    data = encode_triples(train_triples, src_vocab, tgt_vocab, cor_vocab)
    dev = encode_triples(dev_triples, src_vocab, tgt_vocab, cor_vocab)
    dev_refs = [" ".join(t.y) for t in dev_triples]

    opt = torch.optim.Adam(model.parameters(), lr=1.0, betas=(0.9, 0.98), eps=1e-9)
    with_cor = config.cor_weight > 0 and config.has_correction
    order: list[int] = []
    epoch = 0
    history: list[dict] = []
    final_loss = math.nan
    base_meta = dict(meta or {})

    for step in range(1, steps + 1):
        if len(order) < config.batch_size:
            perm = derive_rng(seed, "batches", epoch).permutation(len(data))
            order.extend(int(i) for i in perm)
            epoch += 1
        index, order = order[: config.batch_size], order[config.batch_size:]
        batch = assemble_batch(data, index, config, with_cor)
        l_mt, l_cor = batch_losses(model, batch, config.cor_weight)
        loss = joint_loss(l_mt, 0.0 if l_cor is None else l_cor, config.cor_weight)
        if not torch.isfinite(loss):
            raise DivergenceError(step)
        lr = noam_lr(step, config.d_model, config.warmup)
        for group in opt.param_groups:
            group["lr"] = lr
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        final_loss = float(loss)

        if step % eval_every == 0 or step == steps:
            score = _dev_chrf(model, dev, tgt_vocab, dev_refs, dev_max_len)
            path = run_dir / f"ckpt_{step:06d}.ntck"
            save_checkpoint(
                path, config, state_arrays(model),
                meta={**base_meta, "step": step, "dev_chrf": round(score, 6), "seed": seed},
            )
            history.append({"step": step, "dev_chrf": score, "path": str(path)})

    best = max(history, key=lambda h: (h["dev_chrf"], -h["step"]))
    return TrainResult(
        best_path=Path(best["path"]),
        best_step=best["step"],
        best_score=best["dev_chrf"],
        history=history,
        final_loss=final_loss,
    )


def token_accuracy(
    model: DualDecoderModel,
    triples: Sequence[Triple],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    cor_vocab: Vocab | None,
    decoder: str = "mt",
) -> float:
    """Teacher-forced next-token accuracy of one decoder over a dataset."""
    data = encode_triples(triples, src_vocab, tgt_vocab, cor_vocab)
    config = model.config
    batch = assemble_batch(data, range(len(data)), config, with_cor=decoder == "cor")
    model.eval()
    with torch.no_grad():
        memory = model.encode(batch.src, batch.src_mask)
        visual = model.project_visual(batch.features)
        if decoder == "mt":
            _, count, hits = model.decoder_nll(
                "mt", memory, batch.src_mask, batch.mt_input, batch.mt_target, visual
            )
        else:
            _, count, hits = model.decoder_nll(
                "cor", memory, batch.src_mask, batch.cor_input, batch.cor_target, visual
            )
    return float(hits) / float(count)
