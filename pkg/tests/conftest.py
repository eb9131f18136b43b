import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthcorpus import correspondence_corpus, shared_token_corpus  # noqa: E402

from linkkit.model.serialize import serialize_pairs  # noqa: E402
from linkkit.sampling import SamplingConfig, build_balanced_dataset  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "goldens"

TRANSFER_PROJECTS = ("ALPHA", "BRAVO", "CHARLIE", "DELTA")


@pytest.fixture(scope="session")
def pgcli_dataset():
    """~1.3k-pair single-project dataset with a learnable non-lexical signal."""
    issues, commits = correspondence_corpus(key="PGK", n_links=650, seed=3)
    return build_balanced_dataset(
        issues, commits, SamplingConfig(window_days=7, seed=11), "PGK",
        built_at="2024-01-01T00:00:00Z",
    )


@pytest.fixture(scope="session")
def transfer_datasets():
    """Four projects whose link signal is a shared token from a global pool."""
    datasets = {}
    for n, key in enumerate(TRANSFER_PROJECTS):
        issues, commits = shared_token_corpus(key=key, n_links=100, seed=20 + n)
        datasets[key] = build_balanced_dataset(
            issues, commits, SamplingConfig(window_days=7, seed=30 + n), key,
            built_at="2024-01-01T00:00:00Z",
        )
    return datasets


@pytest.fixture(scope="session")
def tiny_encoder_dir(tmp_path_factory, pgcli_dataset, transfer_datasets):
    """Local tiny RoBERTa checkpoint whose vocabulary covers the fixtures."""
    from encoders import build_tiny_encoder

    texts = []
    for dataset in [pgcli_dataset, *transfer_datasets.values()]:
        issue_halves, commit_halves = serialize_pairs(list(dataset.pairs))
        texts.extend(issue_halves)
        texts.extend(commit_halves)
    out = tmp_path_factory.mktemp("encoder") / "tiny-roberta"
    return build_tiny_encoder(out, texts)
