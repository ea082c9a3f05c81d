from .config import DEFAULT_COR_WEIGHT, ModelConfig, desk_config, paper_config
from .network import DualDecoderModel, joint_loss, pin_single_thread
from .checkpoint import load_checkpoint, restore_model, save_checkpoint, state_arrays
from .training import (
    EncodedDataset,
    TrainResult,
    batch_losses,
    encode_triples,
    noam_lr,
    token_accuracy,
    train_model,
)
from .decoding import (
    attention_dump,
    beam_search,
    beam_search_core,
    exhaustive_search,
    greedy_decode_batch,
)
from .estimator import TranslationModel

__all__ = [
    "DEFAULT_COR_WEIGHT",
    "DualDecoderModel",
    "EncodedDataset",
    "ModelConfig",
    "TrainResult",
    "TranslationModel",
    "attention_dump",
    "batch_losses",
    "beam_search",
    "beam_search_core",
    "desk_config",
    "encode_triples",
    "exhaustive_search",
    "greedy_decode_batch",
    "joint_loss",
    "load_checkpoint",
    "noam_lr",
    "paper_config",
    "pin_single_thread",
    "restore_model",
    "save_checkpoint",
    "state_arrays",
    "token_accuracy",
    "train_model",
]
