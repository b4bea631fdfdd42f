"""Python access to the claimrank retrieval core."""

from ._core import (
    Bm25Index,
    Engine,
    Error,
    IoError,
    MissingArtifactError,
    ParseError,
    ValidationError,
    VectorStore,
    average_precision,
    cosine,
    evaluate_run,
    has_positives,
    hash_embed,
    reciprocal_rank,
    split_sentences,
    tokenize,
    train_ranksvm_scores,
)

__all__ = [
    "Bm25Index",
    "Engine",
    "Error",
    "IoError",
    "MissingArtifactError",
    "ParseError",
    "ValidationError",
    "VectorStore",
    "average_precision",
    "cosine",
    "evaluate_run",
    "has_positives",
    "hash_embed",
    "reciprocal_rank",
    "split_sentences",
    "tokenize",
    "train_ranksvm_scores",
]
