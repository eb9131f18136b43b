"""Input validation helpers shared by the model backends."""

from __future__ import annotations

import numpy as np

from ..corpus import TRUE_LINK, LinkPair
from ..errors import ValidationError


def check_pairs(X) -> list[LinkPair]:
    """Validate and materialize a sequence of LinkPair inputs."""
    pairs = list(X)
    for i, pair in enumerate(pairs):
        if not isinstance(pair, LinkPair):
            raise ValidationError(
                f"expected LinkPair at position {i}, got {type(pair).__name__}"
            )
    return pairs


def labels_from_pairs(pairs: list[LinkPair]) -> np.ndarray:
    """Binary targets: 1 for true_link, 0 for false_link."""
    return np.array([1 if p.label == TRUE_LINK else 0 for p in pairs], dtype=np.int64)
