"""Lexical baseline: TF-IDF cosine similarity plus the one-hot metadata
vector, with a logistic-regression decision rule. Fully deterministic,
used for desk-scale verification of the full pipeline.
"""

from __future__ import annotations

from pathlib import Path

import joblib
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.linear_model import LogisticRegression

from ..corpus import TRUE_LINK, LinkPair
from ..errors import TrainingError
from ..preprocess import one_hot_encode
from .serialize import serialize_pairs
from .validation import check_pairs, labels_from_pairs

_ARTIFACT_FILE = "lexical_model.joblib"


class LexicalLinkClassifier(BaseEstimator, ClassifierMixin):
    """TF-IDF cosine + one-hot features behind a linear rule."""

    def __init__(self, threshold: float = 0.5, include_description: bool = False):
        self.threshold = threshold
        self.include_description = include_description

    def fit(self, X, y=None):
        X = check_pairs(X)
        if not X:
            raise TrainingError("empty training set")
        y = labels_from_pairs(X) if y is None else np.asarray(y)
        if len(set(y.tolist())) < 2:
            raise TrainingError("training set contains a single class")
        issue_halves, commit_halves = serialize_pairs(
            X, include_description=self.include_description, with_metadata=False
        )
        self.vectorizer_ = TfidfVectorizer()
        try:
            self.vectorizer_.fit(issue_halves + commit_halves)
        except ValueError as exc:
            raise TrainingError(f"TF-IDF fit failed: {exc}") from exc
        self.classifier_ = LogisticRegression(max_iter=1000)
        self.classifier_.fit(self._features(X), y)
        return self

    def _features(self, pairs: list[LinkPair]) -> np.ndarray:
        issue_halves, commit_halves = serialize_pairs(
            pairs, include_description=self.include_description, with_metadata=False
        )
        issue_vecs = self.vectorizer_.transform(issue_halves)
        commit_vecs = self.vectorizer_.transform(commit_halves)
        # Rows are l2-normalized by TfidfVectorizer, so the dot product is
        # the cosine similarity.
        cosine = np.asarray(issue_vecs.multiply(commit_vecs).sum(axis=1)).ravel()
        one_hot = np.vstack([one_hot_encode(p.issue, p.commit) for p in pairs])
        return np.column_stack([cosine, one_hot])

    def _check_fitted(self):
        if not hasattr(self, "classifier_"):
            raise NotFittedError("LexicalLinkClassifier is not fitted")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_pairs(X)
        if not X:
            return np.zeros((0, 2))
        return self.classifier_.predict_proba(self._features(X))

    def link_probabilities(self, X) -> list[float]:
        """Probability of true_link per pair, order-preserving."""
        proba = self.predict_proba(X)
        positive = list(self.classifier_.classes_).index(1)
        return proba[:, positive].tolist()

    def predict(self, X) -> list[str]:
        return [
            TRUE_LINK if p >= self.threshold else "false_link"
            for p in self.link_probabilities(X)
        ]

    def cosine_similarity(self, pair: LinkPair) -> float:
        self._check_fitted()
        return float(self._features([pair])[0, 0])

    def save(self, out_dir: Path) -> None:
        joblib.dump(self, Path(out_dir) / _ARTIFACT_FILE)

    @staticmethod
    def load(out_dir: Path) -> "LexicalLinkClassifier":
        return joblib.load(Path(out_dir) / _ARTIFACT_FILE)
