"""Python bindings for the multi-question generation core."""

from ._core import (
    EncoderInput,
    MqgError,
    QAPair,
    Section,
    classify,
    cosine_similarity,
    dedup,
    generate_section,
    lexical_scores,
    load_corpus,
    mean_pool,
    mqs_loss,
    mqs_loss_gradient,
    normalize_question,
    preprocess,
    rouge_l_alt,
    rouge_l_f1,
    rouge_l_max,
    self_bleu,
    summarize,
    sweep_threshold,
    tag_question_type,
    tokenize,
    total_loss,
)

__version__ = "0.1.0"
