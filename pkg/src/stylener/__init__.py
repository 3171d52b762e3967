"""Style-transfer data augmentation for low-resource NER.

The library linearizes BIO-tagged sentences into marker-annotated token
sequences, trains a small recurrent sequence-to-sequence model to rewrite
them between two styles, decodes under an automaton that guarantees
well-formed entity markup, picks the best of k candidates with a weighted
blend of style, adequacy, fluency and diversity scores, and measures the
downstream effect with a toy window tagger.
"""

from .corpus import (
    DEFAULT_ENTITY_TYPES,
    BioTag,
    ConllFormatError,
    CorpusError,
    FewShotSpec,
    NerCorpus,
    ParallelPair,
    TaggedSentence,
    TypeRegistry,
    augment_entity_replacement,
    entity_spans,
    filter_by_linearized_length,
    linearized_length,
    read_conll,
    read_pairs_jsonl,
    sample_few_shot,
    sample_low_resource,
    write_conll,
    write_pairs_jsonl,
)
from .linearize import (
    EntitySegment,
    LinearizedSentence,
    ParseErrorCode,
    PrefixScheme,
    RenderedParseError,
    TaskPrefix,
    TextSegment,
    delinearize,
    linearize,
    parse_rendered,
    render,
    render_tokens,
    surface_tokens,
)
from .vocab import BOS, EOS, PAD, UNK, TokenClass, Vocabulary
from .automaton import DecoderState, Phase, allowed_mask, initial_state, is_terminal, step, walk
from .model import (
    ModelConfig,
    SamplerConfig,
    TransferModel,
    constrained_sample,
    filter_top_k_top_p,
    gumbel_softmax,
    init_discriminator,
    init_transfer_model,
    load_discriminator,
    load_transfer_model,
    sample_soft,
    save_discriminator,
    save_transfer_model,
)
from .train import (
    LossWeights,
    TrainConfig,
    TrainReport,
    TrainResult,
    TrainingDiverged,
    loss_adv_discriminator,
    loss_adv_generator,
    loss_cr,
    loss_pg,
    run_training,
    total_loss,
)
from .tagger import (
    EntitySpan,
    EvalResult,
    TaggerConfig,
    TaggerModel,
    extract_spans,
    load_tagger,
    micro_f1,
    predict,
    pseudo_label,
    repair_bio,
    save_tagger,
    train_tagger,
)
from .select import (
    AugmentResult,
    BigramLm,
    Candidate,
    SelectionWeights,
    StyleClassifier,
    StyleClassifierConfig,
    adequacy_score,
    augment_corpus,
    default_scorers,
    diversity_score,
    edit_distance_chars,
    fluency_from_entropy,
    select_best,
    train_style_classifier,
)
from .synth import SynthConfig, SynthError, informalize, make_synthetic_style_corpus
from .pipeline import DataRegime, PipelineConfig, load_config
from .seeding import derive_rng, derive_seed

__version__ = "0.1.0"
