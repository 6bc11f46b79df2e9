"""Recursive erasure memory network: python bindings over the C++ core."""

from remnet._core import (
    evidence_scores,
    extract_key_phrases,
    generate_dataset,
    masked_softmax,
    parse_sentence,
    rem_forward,
    select_erasures,
    train_and_eval,
    triplet_to_sentence,
)

__all__ = [
    "evidence_scores",
    "extract_key_phrases",
    "generate_dataset",
    "masked_softmax",
    "parse_sentence",
    "rem_forward",
    "select_erasures",
    "train_and_eval",
    "triplet_to_sentence",
]
