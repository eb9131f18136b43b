from .base import (
    LEXICAL_BACKEND,
    MANIFEST_FILE,
    TRANSFORMER_BACKEND,
    ModelHandle,
    TrainConfig,
    classify,
    data_fingerprint,
    fine_tune,
    load_handle,
    predict,
)
from .lexical import LexicalLinkClassifier
from .serialize import DEFAULT_SEP_TOKEN, render_halves, serialize_pair, serialize_pairs
from .validation import check_pairs, labels_from_pairs

__all__ = [
    "DEFAULT_SEP_TOKEN",
    "LEXICAL_BACKEND",
    "LexicalLinkClassifier",
    "MANIFEST_FILE",
    "ModelHandle",
    "TRANSFORMER_BACKEND",
    "TrainConfig",
    "check_pairs",
    "classify",
    "data_fingerprint",
    "fine_tune",
    "labels_from_pairs",
    "load_handle",
    "predict",
    "render_halves",
    "serialize_pair",
    "serialize_pairs",
]
