"""scikit-learn style wrapper around the transducer.

``TranslationModel`` is the composition-friendly face of the workbench:
hyperparameters in ``__init__`` (so ``get_params``/``set_params`` work),
``fit`` on (clean, noisy, target) triples, ``predict`` for translations and
``correct`` for source denoising.
"""

from __future__ import annotations

import tempfile
from typing import Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator

from ..corpus import Triple, Vocab, build_vocab
from ..errors import ConfigError, DataError
from ..validation import TokenSeq
from .config import ModelConfig
from .checkpoint import restore_model
from .decoding import beam_search, greedy_decode_batch
from .network import DualDecoderModel
from .training import train_model

VARIANTS = ("nmt", "mmt", "nmt-cor", "mmt-cor")


class TranslationModel(BaseEstimator):
    """Trainable noisy-text translator, optionally multimodal / self-correcting.

    Variants: "nmt" (text only), "mmt" (adds visual cross-attention),
    "nmt-cor"/"mmt-cor" (add the correction decoder, weight ``cor_weight``).
    """

    def __init__(
        self,
        variant: str = "nmt",
        layers: int = 2,
        d_model: int = 64,
        d_ff: int = 128,
        heads: int = 4,
        dropout: float = 0.1,
        pre_norm: bool = True,
        regions: int = 4,
        d_feat: int = 16,
        cor_weight: float = 0.2,
        warmup: int = 400,
        batch_size: int = 32,
        steps: int = 2000,
        eval_every: int = 200,
        seed: int = 0,
        beam_size: int = 4,
        max_len: int = 24,
        min_freq: int = 1,
        run_dir: str | None = None,
    ):
        self.variant = variant
        self.layers = layers
        self.d_model = d_model
        self.d_ff = d_ff
        self.heads = heads
        self.dropout = dropout
        self.pre_norm = pre_norm
        self.regions = regions
        self.d_feat = d_feat
        self.cor_weight = cor_weight
        self.warmup = warmup
        self.batch_size = batch_size
        self.steps = steps
        self.eval_every = eval_every
        self.seed = seed
        self.beam_size = beam_size
        self.max_len = max_len
        self.min_freq = min_freq
        self.run_dir = run_dir

    # -- configuration -------------------------------------------------------

    def _check_variant(self) -> tuple[bool, bool]:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        visual = self.variant.startswith("mmt")
        corrective = self.variant.endswith("-cor")
        if corrective and self.cor_weight <= 0:
            raise ConfigError("correction variants require cor_weight > 0")
        return visual, corrective

    def build_config(
        self, src_vocab: Vocab, tgt_vocab: Vocab, cor_vocab: Vocab | None
    ) -> ModelConfig:
        visual, corrective = self._check_variant()
        return ModelConfig(
            src_vocab_size=len(src_vocab),
            tgt_vocab_size=len(tgt_vocab),
            cor_vocab_size=len(cor_vocab) if corrective and cor_vocab else 0,
            layers=self.layers,
            d_model=self.d_model,
            d_ff=self.d_ff,
            heads=self.heads,
            dropout=self.dropout,
            pre_norm=self.pre_norm,
            visual=visual,
            regions=self.regions,
            d_feat=self.d_feat,
            cor_weight=self.cor_weight if corrective else 0.0,
            warmup=self.warmup,
            batch_size=self.batch_size,
        )

    # -- fitting ---------------------------------------------------------------

    def fit(
        self,
        X: Sequence[Triple],
        y=None,
        dev: Sequence[Triple] | None = None,
        vocabs: tuple[Vocab, Vocab, Vocab | None] | None = None,
    ) -> "TranslationModel":
        """Train on triples; dev defaults to the training set."""
        if not X:
            raise DataError("cannot fit on an empty dataset")
        visual, corrective = self._check_variant()
        if visual and X[0].features is None:
            raise ConfigError("multimodal variants require feature tensors")
        if vocabs is not None:
            src_vocab, tgt_vocab, cor_vocab = vocabs
        else:
            src_vocab = build_vocab([t.x_noisy for t in X], self.min_freq)
            tgt_vocab = build_vocab([t.y for t in X], self.min_freq)
            cor_vocab = build_vocab([t.x_clean for t in X], self.min_freq)
        config = self.build_config(src_vocab, tgt_vocab, cor_vocab)
        run_dir = self.run_dir or tempfile.mkdtemp(prefix="noisymt-fit-")
        result = train_model(
            config,
            X,
            dev if dev is not None else X,
            src_vocab,
            tgt_vocab,
            cor_vocab if corrective else None,
            seed=self.seed,
            steps=self.steps,
            eval_every=self.eval_every,
            run_dir=run_dir,
            dev_max_len=self.max_len,
        )
        self.src_vocab_, self.tgt_vocab_, self.cor_vocab_ = src_vocab, tgt_vocab, cor_vocab
        self.config_ = config
        self.model_, _ = restore_model(result.best_path)
        self.train_result_ = result
        return self

    def _require_fitted(self) -> DualDecoderModel:
        if not hasattr(self, "model_"):
            raise ConfigError("TranslationModel must be fitted first")
        return self.model_

    def _features_tensor(self, features, i: int) -> torch.Tensor | None:
        if not self.config_.visual:
            return None
        if features is None:
            raise DataError("multimodal model needs features at decode time")
        return torch.from_numpy(np.asarray(features[i], dtype=np.float32))

    # -- inference ---------------------------------------------------------------

    def _decode(
        self, X: Sequence[Sequence[str]], features, decoder: str, out_vocab: Vocab
    ) -> list[TokenSeq]:
        model = self._require_fitted()
        if self.beam_size == 1:
            feats = None
            if self.config_.visual:
                if features is None:
                    raise DataError("multimodal model needs features at decode time")
                feats = torch.from_numpy(np.asarray(features, dtype=np.float32))
            ids = greedy_decode_batch(
                model, [self.src_vocab_.encode(s) for s in X], feats,
                decoder=decoder, max_len=self.max_len,
            )
            return [out_vocab.decode_clean(seq) for seq in ids]
        out = []
        for i, sent in enumerate(X):
            ids = beam_search(
                model,
                self.src_vocab_.encode(sent),
                decoder=decoder,
                features=self._features_tensor(features, i),
                beam_size=self.beam_size,
                max_len=self.max_len,
            )
            out.append(out_vocab.decode_clean(ids))
        return out

    def predict(self, X: Sequence[Sequence[str]], features=None) -> list[TokenSeq]:
        """Translate (possibly noisy) source sentences."""
        return self._decode(X, features, "mt", self.tgt_vocab_)

    def correct(self, X: Sequence[Sequence[str]], features=None) -> list[TokenSeq]:
        """Recover clean sources with the correction decoder."""
        if self.cor_vocab_ is None or not self.config_.has_correction:
            raise ConfigError("this variant has no correction decoder")
        return self._decode(X, features, "cor", self.cor_vocab_)

    def encode_states(self, sentence: Sequence[str]) -> np.ndarray:
        """Encoder hidden states for one sentence (rows = tokens)."""
        model = self._require_fitted()
        model.eval()
        with torch.no_grad():
            states = model.encode_ids(self.src_vocab_.encode(sentence))
        return states.double().numpy()
