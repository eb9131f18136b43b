"""linkkit: issue-commit link recovery datasets, classifiers, and
leakage-aware evaluation protocols."""

__version__ = "0.1.0"

from .corpus import (
    Commit,
    DatasetManifest,
    Issue,
    LinkPair,
    ProjectDataset,
    Provenance,
    read_dataset,
    write_dataset,
)
from .errors import (
    AuditError,
    DataError,
    IngestionError,
    LinkkitError,
    SchemaError,
    TrainingError,
    ValidationError,
)
from .evaluation import ConfusionCounts, Metrics, aggregate, compute_metrics
from .model import ModelHandle, TrainConfig, classify, fine_tune, predict, serialize_pair
from .sampling import SamplingConfig, build_balanced_dataset
from .splitting import (
    AuditReport,
    Fold,
    SplitPlan,
    audit_leakage,
    project_folds,
    random_split,
    temporal_split,
)

__all__ = [
    "AuditError",
    "AuditReport",
    "Commit",
    "ConfusionCounts",
    "DataError",
    "DatasetManifest",
    "Fold",
    "IngestionError",
    "Issue",
    "LinkPair",
    "LinkkitError",
    "Metrics",
    "ModelHandle",
    "ProjectDataset",
    "Provenance",
    "SamplingConfig",
    "SchemaError",
    "SplitPlan",
    "TrainConfig",
    "TrainingError",
    "ValidationError",
    "aggregate",
    "audit_leakage",
    "build_balanced_dataset",
    "classify",
    "compute_metrics",
    "fine_tune",
    "predict",
    "project_folds",
    "random_split",
    "read_dataset",
    "serialize_pair",
    "temporal_split",
    "write_dataset",
]
