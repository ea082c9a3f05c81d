"""Model hyperparameters and scale presets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

from ..errors import ConfigError

# Correction-loss weight per noise level, from hyperparameter tuning.
DEFAULT_COR_WEIGHT = {1: 0.2, 2: 0.2, 4: 0.4, 6: 0.4, 10: 0.8}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and optimization settings.

    The loss is plain cross-entropy; ``cor_weight`` is the weight of the
    error-correction decoder's loss in the joint objective. ``precision``
    "f64" exists for gradient checking; training uses "f32".
    """

    src_vocab_size: int
    tgt_vocab_size: int
    cor_vocab_size: int = 0
    layers: int = 2
    d_model: int = 64
    d_ff: int = 128
    heads: int = 4
    dropout: float = 0.1
    pre_norm: bool = True
    visual: bool = False
    regions: int = 4
    d_feat: int = 16
    cor_weight: float = 0.0
    warmup: int = 400
    batch_size: int = 32
    max_len: int = 64
    precision: str = "f32"

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ConfigError("d_model must be divisible by heads")
        if self.cor_weight < 0:
            raise ConfigError("cor_weight must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.precision not in ("f32", "f64"):
            raise ConfigError("precision must be 'f32' or 'f64'")
        if self.src_vocab_size < 5 or self.tgt_vocab_size < 5:
            raise ConfigError("vocab sizes must include the specials")

    @property
    def has_correction(self) -> bool:
        return self.cor_vocab_size > 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, payload: str) -> "ModelConfig":
        return cls(**json.loads(payload))

    def with_(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs)


def desk_config(**overrides) -> ModelConfig:
    """Tiny CPU-friendly defaults."""
    base = dict(
        src_vocab_size=overrides.pop("src_vocab_size", 64),
        tgt_vocab_size=overrides.pop("tgt_vocab_size", 64),
        layers=2, d_model=64, d_ff=128, heads=4, dropout=0.1,
        warmup=400, batch_size=32,
    )
    base.update(overrides)
    return ModelConfig(**base)


def paper_config(**overrides) -> ModelConfig:
    """Full-scale settings (6 layers, d=512, ff=1024, 4 heads, dropout 0.3)."""
    base = dict(
        src_vocab_size=overrides.pop("src_vocab_size", 16000),
        tgt_vocab_size=overrides.pop("tgt_vocab_size", 16000),
        layers=6, d_model=512, d_ff=1024, heads=4, dropout=0.3,
        warmup=8000, batch_size=64, regions=36, d_feat=2048,
    )
    base.update(overrides)
    return ModelConfig(**base)
