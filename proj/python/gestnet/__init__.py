"""Two-stream skeleton-based hand gesture recognition core."""

from ._gestnet import (
    attention_map,
    displacement_features,
    fuse_and_classify,
    fuse_scores,
    generate_gesture,
    hand_topology,
    indrnn,
    partitioned_adjacency,
    recurrent_features,
    sample_frame_indices,
    sample_frames,
    softmax,
    write_synthetic_dataset,
)

__all__ = [
    "attention_map",
    "displacement_features",
    "fuse_and_classify",
    "fuse_scores",
    "generate_gesture",
    "hand_topology",
    "indrnn",
    "partitioned_adjacency",
    "recurrent_features",
    "sample_frame_indices",
    "sample_frames",
    "softmax",
    "write_synthetic_dataset",
]
