"""Shared-encoder, dual-decoder transformer with optional visual attention.

One encoder feeds two decoders: "mt" generates the translation, "cor"
recovers the clean source. In visual models every decoder layer runs an
extra cross-attention over projected image region features, placed after
the textual cross-attention and before the feed-forward block.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..corpus import BOS_ID, EOS_ID, PAD_ID
from ..errors import ConfigError, DataError
from .config import ModelConfig

_THREADS_PINNED = False


def pin_single_thread() -> None:
    """Keep torch on one intra-op thread so results are bit-reproducible."""
    global _THREADS_PINNED
    if not _THREADS_PINNED:
        torch.set_num_threads(1)
        _THREADS_PINNED = True


def _dtype_of(config: ModelConfig) -> torch.dtype:
    return torch.float64 if config.precision == "f64" else torch.float32


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, heads: int, dropout: float):
        super().__init__()
        self.heads = heads
        self.d_head = d_model // heads
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.out_proj = nn.Linear(d_model, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, query, memory, mask=None):
        """query (B,T,D) attending over memory (B,S,D); mask True = keep.

        Returns the attended values and the head-averaged attention matrix.
        """
        b, t, d = query.shape
        s = memory.shape[1]
        q = self.q_proj(query).view(b, t, self.heads, self.d_head).transpose(1, 2)
        k = self.k_proj(memory).view(b, s, self.heads, self.d_head).transpose(1, 2)
        v = self.v_proj(memory).view(b, s, self.heads, self.d_head).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        if mask is not None:
            scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        attended = self.dropout(weights) @ v
        out = attended.transpose(1, 2).reshape(b, t, d)
        return self.out_proj(out), weights.mean(dim=1)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int, dropout: float):
        super().__init__()
        self.inner = nn.Linear(d_model, d_ff)
        self.outer = nn.Linear(d_ff, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        return self.outer(self.dropout(F.relu(self.inner(x))))


class SublayerWiring(nn.Module):
    """Residual + layer norm, in pre-norm or post-norm order."""

    def __init__(self, d_model: int, dropout: float, pre_norm: bool):
        super().__init__()
        self.norm = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)
        self.pre_norm = pre_norm

    def forward(self, x, sublayer):
        if self.pre_norm:
            out = sublayer(self.norm(x))
            y, extra = out if isinstance(out, tuple) else (out, None)
            return x + self.dropout(y), extra
        out = sublayer(x)
        y, extra = out if isinstance(out, tuple) else (out, None)
        return self.norm(x + self.dropout(y)), extra


class PositionalEncoding(nn.Module):
    def __init__(self, d_model: int, max_len: int):
        super().__init__()
        position = torch.arange(max_len).unsqueeze(1).double()
        div = torch.exp(torch.arange(0, d_model, 2).double() * (-math.log(10000.0) / d_model))
        table = torch.zeros(max_len, d_model, dtype=torch.float64)
        table[:, 0::2] = torch.sin(position * div)
        table[:, 1::2] = torch.cos(position * div)
        self.register_buffer("table", table, persistent=False)

    def forward(self, x):
        t = x.shape[1]
        if t > self.table.shape[0]:
            raise DataError(f"sequence length {t} exceeds positional table")
        return x + self.table[:t].to(x.dtype)


class EncoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.self_attn = MultiHeadAttention(config.d_model, config.heads, config.dropout)
        self.ff = FeedForward(config.d_model, config.d_ff, config.dropout)
        self.wire_attn = SublayerWiring(config.d_model, config.dropout, config.pre_norm)
        self.wire_ff = SublayerWiring(config.d_model, config.dropout, config.pre_norm)

    def forward(self, x, mask):
        x, _ = self.wire_attn(x, lambda h: self.self_attn(h, h, mask))
        x, _ = self.wire_ff(x, self.ff)
        return x


class Encoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.scale = math.sqrt(config.d_model)
        self.embed = nn.Embedding(config.src_vocab_size, config.d_model)
        self.positions = PositionalEncoding(config.d_model, config.max_len)
        self.dropout = nn.Dropout(config.dropout)
        self.layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.layers))
        self.final_norm = nn.LayerNorm(config.d_model) if config.pre_norm else None

    def forward(self, src_ids, src_mask):
        x = self.dropout(self.positions(self.embed(src_ids) * self.scale))
        for layer in self.layers:
            x = layer(x, src_mask)
        if self.final_norm is not None:
            x = self.final_norm(x)
        return x


class DecoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        d, h, p = config.d_model, config.heads, config.dropout
        self.self_attn = MultiHeadAttention(d, h, p)
        self.cross_attn = MultiHeadAttention(d, h, p)
        self.visual_attn = MultiHeadAttention(d, h, p) if config.visual else None
        self.ff = FeedForward(d, config.d_ff, p)
        self.wire_self = SublayerWiring(d, p, config.pre_norm)
        self.wire_cross = SublayerWiring(d, p, config.pre_norm)
        self.wire_visual = SublayerWiring(d, p, config.pre_norm) if config.visual else None
        self.wire_ff = SublayerWiring(d, p, config.pre_norm)

    def forward(self, x, memory, visual, self_mask, cross_mask):
        x, _ = self.wire_self(x, lambda h: self.self_attn(h, h, self_mask))
        x, text_attn = self.wire_cross(x, lambda h: self.cross_attn(h, memory, cross_mask))
        visual_attn = None
        if self.visual_attn is not None:
            if visual is None:
                raise DataError("visual model requires image features")
            x, visual_attn = self.wire_visual(x, lambda h: self.visual_attn(h, visual))
        x, _ = self.wire_ff(x, self.ff)
        return x, text_attn, visual_attn


class Decoder(nn.Module):
    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.scale = math.sqrt(config.d_model)
        self.embed = nn.Embedding(vocab_size, config.d_model)
        self.positions = PositionalEncoding(config.d_model, config.max_len)
        self.dropout = nn.Dropout(config.dropout)
        self.layers = nn.ModuleList(DecoderLayer(config) for _ in range(config.layers))
        self.final_norm = nn.LayerNorm(config.d_model) if config.pre_norm else None
        self.out_proj = nn.Linear(config.d_model, vocab_size)

    def forward(self, tgt_ids, memory, visual, cross_mask, collect_attn=False):
        t = tgt_ids.shape[1]
        causal = torch.tril(torch.ones(t, t, dtype=torch.bool, device=tgt_ids.device))
        self_mask = causal.view(1, 1, t, t)
        x = self.dropout(self.positions(self.embed(tgt_ids) * self.scale))
        text_maps, visual_maps = [], []
        for layer in self.layers:
            x, text_attn, visual_attn = layer(x, memory, visual, self_mask, cross_mask)
            if collect_attn:
                text_maps.append(text_attn)
                if visual_attn is not None:
                    visual_maps.append(visual_attn)
        if self.final_norm is not None:
            x = self.final_norm(x)
        logits = self.out_proj(x)
        if collect_attn:
            return logits, text_maps, visual_maps
        return logits


class DualDecoderModel(nn.Module):
    """Encoder + translation decoder (+ correction decoder, + visual path)."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.encoder = Encoder(config)
        self.mt_decoder = Decoder(config, config.tgt_vocab_size)
        self.cor_decoder = Decoder(config, config.cor_vocab_size) if config.has_correction else None
        self.visual_proj = nn.Linear(config.d_feat, config.d_model) if config.visual else None
        self.to(_dtype_of(config))

    # -- plumbing ----------------------------------------------------------

    def _decoder(self, name: str) -> Decoder:
        if name == "mt":
            return self.mt_decoder
        if name == "cor":
            if self.cor_decoder is None:
                raise ConfigError("model has no correction decoder")
            return self.cor_decoder
        raise ConfigError(f"unknown decoder {name!r}")

    def project_visual(self, features: torch.Tensor | None) -> torch.Tensor | None:
        if not self.config.visual:
            return None
        if features is None:
            raise DataError("visual model requires image features")
        return self.visual_proj(features.to(_dtype_of(self.config)))

    def param_groups(self) -> dict[str, list[tuple[str, nn.Parameter]]]:
        """Named parameters split into enc / mt_dec / cor_dec / shared_visual."""
        groups: dict[str, list[tuple[str, nn.Parameter]]] = {
            "enc": [], "mt_dec": [], "cor_dec": [], "shared_visual": [],
        }
        prefix_map = {
            "encoder.": "enc",
            "mt_decoder.": "mt_dec",
            "cor_decoder.": "cor_dec",
            "visual_proj.": "shared_visual",
        }
        for name, param in self.named_parameters():
            for prefix, group in prefix_map.items():
                if name.startswith(prefix):
                    groups[group].append((name, param))
                    break
            else:
                raise AssertionError(f"unassigned parameter {name}")
        return groups

    # -- forward passes ------------------------------------------------------

    def encode(self, src_ids: torch.Tensor, src_mask: torch.Tensor) -> torch.Tensor:
        return self.encoder(src_ids, src_mask)

    def encode_ids(self, ids: list[int]) -> torch.Tensor:
        """Hidden states (M, d_model) for one sentence, eval determinism caller's job."""
        if not ids:
            raise DataError("cannot encode an empty sentence")
        if max(ids) >= self.config.src_vocab_size or min(ids) < 0:
            raise DataError("token id out of encoder vocabulary range")
        src = torch.tensor([ids], dtype=torch.long)
        mask = torch.ones(1, 1, 1, len(ids), dtype=torch.bool)
        return self.encode(src, mask)[0]

    def decoder_nll(
        self,
        decoder: str,
        memory: torch.Tensor,
        cross_mask: torch.Tensor,
        dec_input: torch.Tensor,
        dec_target: torch.Tensor,
        visual: torch.Tensor | None,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Summed NLL over non-pad target tokens, token count, per-token hits."""
        logits = self._decoder(decoder)(dec_input, memory, visual, cross_mask)
        log_probs = F.log_softmax(logits, dim=-1)
        picked = log_probs.gather(-1, dec_target.unsqueeze(-1)).squeeze(-1)
        mask = dec_target != PAD_ID
        nll = -(picked * mask).sum()
        hits = ((logits.argmax(dim=-1) == dec_target) & mask).sum()
        return nll, mask.sum(), hits

    def sequence_nll(
        self,
        src_ids: list[int],
        tgt_ids: list[int],
        decoder: str = "mt",
        features: torch.Tensor | None = None,
    ) -> float:
        """Teacher-forced -sum log P(target | source) for one sentence."""
        if not tgt_ids:
            raise DataError("empty target sequence")
        memory = self.encode_ids(src_ids).unsqueeze(0)
        cross_mask = torch.ones(1, 1, 1, len(src_ids), dtype=torch.bool)
        dec_input = torch.tensor([[BOS_ID] + list(tgt_ids)], dtype=torch.long)
        dec_target = torch.tensor([list(tgt_ids) + [EOS_ID]], dtype=torch.long)
        visual = self.project_visual(
            None if features is None else features.unsqueeze(0)
        )
        nll, _, _ = self.decoder_nll(decoder, memory, cross_mask, dec_input, dec_target, visual)
        return float(nll)

    def step_logprobs(
        self,
        decoder: str,
        memory: torch.Tensor,
        cross_mask: torch.Tensor,
        prefixes: torch.Tensor,
        visual: torch.Tensor | None,
    ) -> torch.Tensor:
        """Next-token log-probabilities after each prefix row (B, vocab)."""
        logits = self._decoder(decoder)(prefixes, memory, visual, cross_mask)
        return F.log_softmax(logits[:, -1, :], dim=-1)


def joint_loss(l_mt: torch.Tensor | float, l_cor: torch.Tensor | float, cor_weight: float):
    """Weighted sum of translation and correction losses."""
    if cor_weight < 0:
        raise ConfigError("cor_weight must be >= 0")
    return l_mt + cor_weight * l_cor


def teacher_forcing_batch(
    sequences: list[list[int]], device=None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Pad sequences to (B, T+1) decoder inputs/targets with BOS/EOS framing."""
    width = max(len(s) for s in sequences) + 1
    batch = len(sequences)
    inp = torch.full((batch, width), PAD_ID, dtype=torch.long, device=device)
    tgt = torch.full((batch, width), PAD_ID, dtype=torch.long, device=device)
    for i, seq in enumerate(sequences):
        inp[i, 0] = BOS_ID
        inp[i, 1: len(seq) + 1] = torch.tensor(seq, dtype=torch.long)
        tgt[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        tgt[i, len(seq)] = EOS_ID
    return inp, tgt


def pad_batch(sequences: list[list[int]], device=None) -> tuple[torch.Tensor, torch.Tensor]:
    """Pad source sequences to (B, S); mask shaped (B, 1, 1, S), True = real."""
    width = max(len(s) for s in sequences)
    batch = len(sequences)
    ids = torch.full((batch, width), PAD_ID, dtype=torch.long, device=device)
    mask = torch.zeros(batch, 1, 1, width, dtype=torch.bool, device=device)
    for i, seq in enumerate(sequences):
        ids[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        mask[i, 0, 0, : len(seq)] = True
    return ids, mask
