"""noisymt: noise-robust (multimodal) machine translation workbench."""

from .errors import ConfigError, DataError, DivergenceError, NoisyMTError
from .phonlex import (
    HomophoneIndex,
    PronLexicon,
    build_homophone_index,
    load_bundled_lexicon,
    parse_cmudict,
    strip_stress,
)
from .noise import (
    NOISE_TYPES,
    KeyboardLayout,
    NoiseInjector,
    NoiseRecord,
    NoiseResources,
    NoiseSpec,
    QWERTY_ADJACENCY,
    QWERTY_LAYOUT,
    Substitution,
    edit_distance_candidates,
    eligible_positions,
    homophone_candidates,
    inject_corpus,
    keyboard_variants,
    levenshtein,
    mask_unk,
    mask_unk_corpus,
    mix_clean_noisy,
    perturb_sentence,
    read_noise_records,
    write_noise_records,
)
from .corpus import (
    COLORS,
    SHAPES,
    TARGET_LEXICON,
    Triple,
    Vocab,
    attribute_embedding,
    build_vocab,
    gen_synthetic_grounded,
    make_triples,
    read_corpus,
    read_features,
    read_parallel,
    write_corpus,
    write_features,
)
from .metrics import (
    Edit,
    apply_edits,
    chrf,
    corpus_chrf,
    corpus_correction_f,
    correction_f,
    extract_edits,
)
from .probes import cosine_probe, incongruent_shuffle
from .model import (
    DualDecoderModel,
    ModelConfig,
    TranslationModel,
    beam_search,
    desk_config,
    joint_loss,
    noam_lr,
    paper_config,
    restore_model,
    train_model,
)

__version__ = "0.1.0"
