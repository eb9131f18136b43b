"""Transformer backend: a pretrained encoder with a single fully-connected
head, fine-tuned with binary cross-entropy; the sigmoid output is the link
probability. The checkpoint with the best validation F1 is kept.
"""

from __future__ import annotations

import logging
import random
from pathlib import Path

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..corpus import TRUE_LINK
from ..errors import TrainingError
from ..evaluation import compute_metrics
from .serialize import serialize_pairs
from .validation import check_pairs, labels_from_pairs

logger = logging.getLogger(__name__)

SUPPORTED_FAMILIES = ("roberta", "distilbert", "albert")


def _load_checkpoint(source: str, seed: int):
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    torch.manual_seed(seed)
    try:
        tokenizer = AutoTokenizer.from_pretrained(source)
        model = AutoModelForSequenceClassification.from_pretrained(source, num_labels=1)
    except (OSError, EnvironmentError, ValueError) as exc:
        raise TrainingError(f"cannot resolve encoder {source!r}: {exc}") from exc
    family = getattr(model.config, "model_type", "")
    if family not in SUPPORTED_FAMILIES:
        raise TrainingError(
            f"encoder family {family!r} unsupported; expected one of {SUPPORTED_FAMILIES}"
        )
    return tokenizer, model


class TransformerLinkClassifier(BaseEstimator, ClassifierMixin):
    """Sequence-pair classifier over a RoBERTa/DistilBERT/ALBERT encoder."""

    def __init__(self, encoder_name: str = "roberta-base", learning_rate: float = 3e-5,
                 epochs: int = 6, max_input_length: int = 512, batch_size: int = 32,
                 threshold: float = 0.5, seed: int = 0,
                 include_description: bool = False):
        self.encoder_name = encoder_name
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.max_input_length = max_input_length
        self.batch_size = batch_size
        self.threshold = threshold
        self.seed = seed
        self.include_description = include_description

    # -- training --------------------------------------------------------

    def fit(self, X, y=None, X_val=None, y_val=None, init_weights_from: str | None = None):
        X = check_pairs(X)
        if not X:
            raise TrainingError("empty training set")
        y = labels_from_pairs(X) if y is None else np.asarray(y)
        source = init_weights_from or self.encoder_name
        self.tokenizer_, self.model_ = _load_checkpoint(str(source), self.seed)
        self.model_.train()

        optimizer = torch.optim.AdamW(self.model_.parameters(), lr=self.learning_rate)
        loss_fn = torch.nn.BCEWithLogitsLoss()
        encoded = self._encode(X)
        targets = torch.tensor(y, dtype=torch.float32)

        val_pairs = check_pairs(X_val) if X_val is not None else None
        val_targets = (
            labels_from_pairs(val_pairs) if val_pairs is not None and y_val is None
            else (np.asarray(y_val) if y_val is not None else None)
        )

        self.initial_loss_ = self._mean_loss(encoded, targets, loss_fn)
        self.loss_history_ = []
        self.val_f1_history_ = []
        best = None

        shuffler = random.Random(self.seed)
        indices = list(range(len(X)))
        try:
            for epoch in range(self.epochs):
                shuffler.shuffle(indices)
                self.model_.train()
                total, batches = 0.0, 0
                for start in range(0, len(indices), self.batch_size):
                    chunk = indices[start:start + self.batch_size]
                    optimizer.zero_grad()
                    logits = self.model_(**self._slice(encoded, chunk)).logits.squeeze(-1)
                    loss = loss_fn(logits, targets[chunk])
                    loss.backward()
                    optimizer.step()
                    total += loss.item()
                    batches += 1
                self.loss_history_.append(total / max(batches, 1))

                if val_pairs:
                    probs = self._probabilities(val_pairs)
                    preds = [p >= self.threshold for p in probs]
                    _, metrics = compute_metrics(val_targets.tolist(), preds)
                    self.val_f1_history_.append(metrics.f1)
                    if best is None or metrics.f1 > best[0]:
                        best = (metrics.f1, epoch,
                                {k: v.detach().clone()
                                 for k, v in self.model_.state_dict().items()})
        except RuntimeError as exc:
            if "out of memory" in str(exc).lower():
                raise TrainingError(
                    f"out of memory during fine-tuning with batch_size={self.batch_size}"
                ) from exc
            raise

        if best is not None:
            self.best_val_f1_, self.best_epoch_, state = best
            self.model_.load_state_dict(state)
            logger.info("kept epoch %d checkpoint (val F1 %.4f)",
                        self.best_epoch_, self.best_val_f1_)
        else:
            self.best_val_f1_, self.best_epoch_ = None, self.epochs - 1
        self.model_.eval()
        return self

    # -- inference -------------------------------------------------------

    def _encode(self, pairs):
        issue_halves, commit_halves = serialize_pairs(
            pairs, include_description=self.include_description,
            tokenizer=self.tokenizer_, max_input_length=self.max_input_length,
        )
        return self.tokenizer_(
            issue_halves, commit_halves, padding=True, truncation=True,
            max_length=self.max_input_length, return_tensors="pt",
        )

    @staticmethod
    def _slice(encoded, idx):
        return {k: v[idx] for k, v in encoded.items()}

    def _mean_loss(self, encoded, targets, loss_fn) -> float:
        self.model_.eval()
        total, batches = 0.0, 0
        with torch.no_grad():
            for start in range(0, len(targets), self.batch_size):
                idx = list(range(start, min(start + self.batch_size, len(targets))))
                logits = self.model_(**self._slice(encoded, idx)).logits.squeeze(-1)
                total += loss_fn(logits, targets[idx]).item()
                batches += 1
        return total / max(batches, 1)

    def _probabilities(self, pairs) -> list[float]:
        self.model_.eval()
        encoded = self._encode(pairs)
        probs: list[float] = []
        with torch.no_grad():
            for start in range(0, len(pairs), self.batch_size):
                idx = list(range(start, min(start + self.batch_size, len(pairs))))
                logits = self.model_(**self._slice(encoded, idx)).logits.squeeze(-1)
                probs.extend(torch.sigmoid(logits).reshape(-1).tolist())
        return probs

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("TransformerLinkClassifier is not fitted")

    def link_probabilities(self, X) -> list[float]:
        """Probability of true_link per pair; deterministic in eval mode."""
        self._check_fitted()
        X = check_pairs(X)
        if not X:
            return []
        return self._probabilities(X)

    def predict_proba(self, X) -> np.ndarray:
        probs = np.array(self.link_probabilities(X))
        return np.column_stack([1.0 - probs, probs])

    def predict(self, X) -> list[str]:
        return [
            TRUE_LINK if p >= self.threshold else "false_link"
            for p in self.link_probabilities(X)
        ]

    # -- persistence -----------------------------------------------------

    def save(self, out_dir: Path) -> None:
        self._check_fitted()
        out_dir = Path(out_dir)
        self.model_.save_pretrained(out_dir)
        self.tokenizer_.save_pretrained(out_dir)

    @classmethod
    def load(cls, out_dir: Path, **params) -> "TransformerLinkClassifier":
        estimator = cls(**params)
        estimator.tokenizer_, estimator.model_ = _load_checkpoint(
            str(out_dir), params.get("seed", 0)
        )
        estimator.model_.eval()
        return estimator
