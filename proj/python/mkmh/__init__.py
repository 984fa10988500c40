"""Multi-k-means compact hash codes for approximate nearest-neighbour search."""

from ._core import (
    Codebook,
    DataError,
    DualCodebook,
    Encoder,
    FormatError,
    Index,
    average_precision,
    brute_force_gt,
    generate_synthetic,
    kmeanspp_seed,
    mean_average_precision,
    objective,
    read_vectors,
    recall_at_r,
    set_max_threads,
    threshold_delta,
    train,
    train_dual,
    write_vectors,
)

__all__ = [
    "Codebook",
    "DataError",
    "DualCodebook",
    "Encoder",
    "FormatError",
    "Index",
    "average_precision",
    "brute_force_gt",
    "generate_synthetic",
    "kmeanspp_seed",
    "mean_average_precision",
    "objective",
    "read_vectors",
    "recall_at_r",
    "set_max_threads",
    "threshold_delta",
    "train",
    "train_dual",
    "write_vectors",
]
