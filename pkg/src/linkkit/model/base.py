"""Training configuration, model handles, and the fine-tune/predict surface.

Two interchangeable backends sit behind the same contract: the transformer
(encoder + fully-connected head + sigmoid) and the deterministic lexical
baseline. A fine-tuned model lives in an artifact directory together with
``train_manifest.json`` (config echo, data fingerprints, final validation
metrics) and can be reloaded into an equivalent predictor.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..corpus import FALSE_LINK, TRUE_LINK, LinkPair
from ..errors import TrainingError, ValidationError
from ..evaluation import compute_metrics

TRANSFORMER_BACKEND = "transformer"
LEXICAL_BACKEND = "lexical"
MANIFEST_FILE = "train_manifest.json"


@dataclass(frozen=True)
class TrainConfig:
    encoder_name: str = "roberta-base"
    learning_rate: float = 3e-5
    epochs: int = 6
    max_input_length: int = 512
    batch_size: int = 32
    threshold: float = 0.5
    seed: int = 0
    backend: str = TRANSFORMER_BACKEND
    include_description: bool = False

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValidationError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.max_input_length < 16:
            raise ValidationError(
                f"max_input_length must be >= 16, got {self.max_input_length}"
            )
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.backend not in (TRANSFORMER_BACKEND, LEXICAL_BACKEND):
            raise ValidationError(f"unknown backend {self.backend!r}")


@dataclass(frozen=True)
class ModelHandle:
    backend: str
    artifact_path: Path
    train_manifest: dict = field(default_factory=dict)


def data_fingerprint(pairs: list[LinkPair]) -> str:
    """Order-independent sha256 over the pair identities."""
    material = "\n".join(sorted(p.pair_id for p in pairs))
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def classify(prob: float, threshold: float = 0.5) -> str:
    """true_link iff prob >= threshold."""
    if not 0 <= prob <= 1:
        raise ValidationError(f"probability out of [0, 1]: {prob}")
    return TRUE_LINK if prob >= threshold else FALSE_LINK


def _build_estimator(cfg: TrainConfig):
    if cfg.backend == LEXICAL_BACKEND:
        from .lexical import LexicalLinkClassifier

        return LexicalLinkClassifier(
            threshold=cfg.threshold, include_description=cfg.include_description
        )
    from .transformer import TransformerLinkClassifier

    return TransformerLinkClassifier(
        encoder_name=cfg.encoder_name, learning_rate=cfg.learning_rate,
        epochs=cfg.epochs, max_input_length=cfg.max_input_length,
        batch_size=cfg.batch_size, threshold=cfg.threshold, seed=cfg.seed,
        include_description=cfg.include_description,
    )


def fine_tune(train: list[LinkPair], val: list[LinkPair], cfg: TrainConfig,
              out_dir: Path, init_from: ModelHandle | None = None) -> ModelHandle:
    """Train the configured backend and persist a reloadable artifact.

    init_from continues training from a previous transformer artifact
    (intermediate fine-tuning); the lexical backend cannot be warm-started
    and rejects it.
    """
    if not train:
        raise TrainingError("empty training set")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    estimator = _build_estimator(cfg)
    if cfg.backend == LEXICAL_BACKEND:
        if init_from is not None:
            raise TrainingError(
                "lexical backend cannot continue from a checkpoint; "
                "refit on the combined data instead"
            )
        estimator.fit(train)
    else:
        estimator.fit(
            train, X_val=val or None,
            init_weights_from=str(init_from.artifact_path) if init_from else None,
        )
    estimator.save(out_dir)

    final_val = {}
    if val:
        probs = estimator.link_probabilities(val)
        preds = [classify(p, cfg.threshold) for p in probs]
        _, metrics = compute_metrics([p.label for p in val], preds)
        final_val = {"precision": metrics.precision, "recall": metrics.recall,
                     "f1": metrics.f1}

    manifest = {
        "backend": cfg.backend,
        "config": asdict(cfg),
        "data_fingerprint": {
            "train": data_fingerprint(train),
            "val": data_fingerprint(val),
            "n_train": len(train),
            "n_val": len(val),
        },
        "init_from": str(init_from.artifact_path) if init_from else None,
        "wall_time_s": round(time.monotonic() - started, 3),
        "final_val_metrics": final_val,
        "loss_history": getattr(estimator, "loss_history_", None),
        "initial_loss": getattr(estimator, "initial_loss_", None),
        "best_epoch": getattr(estimator, "best_epoch_", None),
    }
    (out_dir / MANIFEST_FILE).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return ModelHandle(backend=cfg.backend, artifact_path=out_dir, train_manifest=manifest)


def load_handle(artifact_path: Path) -> ModelHandle:
    artifact_path = Path(artifact_path)
    manifest_file = artifact_path / MANIFEST_FILE
    if not manifest_file.exists():
        raise TrainingError(f"no {MANIFEST_FILE} in {artifact_path}")
    manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
    return ModelHandle(
        backend=manifest["backend"], artifact_path=artifact_path,
        train_manifest=manifest,
    )


def _load_estimator(handle: ModelHandle):
    cfg = handle.train_manifest.get("config", {})
    if handle.backend == LEXICAL_BACKEND:
        from .lexical import LexicalLinkClassifier

        return LexicalLinkClassifier.load(handle.artifact_path)
    from .transformer import TransformerLinkClassifier

    return TransformerLinkClassifier.load(
        handle.artifact_path,
        max_input_length=cfg.get("max_input_length", 512),
        batch_size=cfg.get("batch_size", 32),
        threshold=cfg.get("threshold", 0.5),
        seed=cfg.get("seed", 0),
        include_description=cfg.get("include_description", False),
    )


def predict(model: ModelHandle, pairs: list[LinkPair]) -> list[float]:
    """Order-preserving link probabilities in [0, 1] for a stored model."""
    if not pairs:
        return []
    estimator = _load_estimator(model)
    return estimator.link_probabilities(pairs)
