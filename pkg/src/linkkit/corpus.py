"""Domain data model and its on-disk persistence.

An issue-commit pair dataset is a JSON-Lines file (one object per pair,
embedding the issue and commit records) plus a sibling
``<project>.manifest.json``. Serialization is byte-deterministic for a
fixed dataset: keys are emitted in a fixed documented order and pairs keep
their stored order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path

from .errors import DataError, SchemaError, ValidationError

ISSUE_TYPES = frozenset({"task", "feature", "bug"})
COMMIT_STATUSES = frozenset({"closed", "resolved"})
LABELS = frozenset({"true_link", "false_link"})
PROVENANCE_METHODS = frozenset({"id_reference", "negative_sample"})
ISSUE_SOURCES = frozenset({"jira", "github"})

TRUE_LINK = "true_link"
FALSE_LINK = "false_link"


@dataclass(frozen=True)
class Issue:
    """One issue-tracker record, dates truncated to UTC days."""

    issue_id: str
    title: str
    description: str
    type_raw: str
    type_norm: str
    creator: str
    created_date: date
    updated_date: date
    source: str

    def __post_init__(self):
        if self.type_norm not in ISSUE_TYPES:
            raise ValidationError(
                f"issue {self.issue_id}: type_norm {self.type_norm!r} not in {sorted(ISSUE_TYPES)}"
            )
        if self.source not in ISSUE_SOURCES:
            raise ValidationError(
                f"issue {self.issue_id}: source {self.source!r} not in {sorted(ISSUE_SOURCES)}"
            )
        _require_day(self.created_date, f"issue {self.issue_id}: created_date")
        _require_day(self.updated_date, f"issue {self.issue_id}: updated_date")
        if self.created_date > self.updated_date:
            raise ValidationError(
                f"issue {self.issue_id}: created_date {self.created_date} after "
                f"updated_date {self.updated_date}"
            )


@dataclass(frozen=True)
class Commit:
    """One version-control record. diff_text is stored but never modeled."""

    sha: str
    message: str
    author: str
    committer: str
    authored_date: date
    committed_date: date
    status_raw: str
    status_norm: str
    diff_text: str | None = None

    def __post_init__(self):
        if self.status_norm not in COMMIT_STATUSES:
            raise ValidationError(
                f"commit {self.sha}: status_norm {self.status_norm!r} not in {sorted(COMMIT_STATUSES)}"
            )
        _require_day(self.authored_date, f"commit {self.sha}: authored_date")
        _require_day(self.committed_date, f"commit {self.sha}: committed_date")
        if self.authored_date > self.committed_date:
            raise ValidationError(
                f"commit {self.sha}: authored_date {self.authored_date} after "
                f"committed_date {self.committed_date}"
            )


@dataclass(frozen=True)
class Provenance:
    method: str
    pattern: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.method not in PROVENANCE_METHODS:
            raise ValidationError(
                f"provenance method {self.method!r} not in {sorted(PROVENANCE_METHODS)}"
            )


@dataclass(frozen=True)
class LinkPair:
    """A labeled issue-commit pair with embedded records and provenance.

    pair_date is the commit author date: the commit is the linking artifact
    and the author date is the stable one of the two commit timestamps.
    """

    issue_id: str
    commit_sha: str
    label: str
    pair_date: date
    provenance: Provenance
    issue: Issue
    commit: Commit

    def __post_init__(self):
        key = f"pair ({self.issue_id}, {self.commit_sha})"
        if self.label not in LABELS:
            raise ValidationError(f"{key}: label {self.label!r} not in {sorted(LABELS)}")
        if self.issue.issue_id != self.issue_id:
            raise ValidationError(f"{key}: embedded issue has id {self.issue.issue_id!r}")
        if self.commit.sha != self.commit_sha:
            raise ValidationError(f"{key}: embedded commit has sha {self.commit.sha!r}")
        if self.pair_date != self.commit.authored_date:
            raise ValidationError(
                f"{key}: pair_date {self.pair_date} != commit authored_date "
                f"{self.commit.authored_date}"
            )
        if self.label == TRUE_LINK and self.provenance.method != "id_reference":
            raise ValidationError(f"{key}: true_link requires id_reference provenance")
        if self.label == FALSE_LINK and self.provenance.method != "negative_sample":
            raise ValidationError(f"{key}: false_link requires negative_sample provenance")

    @property
    def pair_id(self) -> str:
        return f"{self.issue_id}::{self.commit_sha}"


def make_pair(issue: Issue, commit: Commit, label: str, provenance: Provenance) -> LinkPair:
    """Build a LinkPair, deriving pair_date and shedding the commit diff."""
    return LinkPair(
        issue_id=issue.issue_id,
        commit_sha=commit.sha,
        label=label,
        pair_date=commit.authored_date,
        provenance=provenance,
        issue=issue,
        commit=replace(commit, diff_text=None),
    )


@dataclass(frozen=True)
class DatasetManifest:
    project: str
    n_true: int
    n_false: int
    window_days: int
    seed: int
    built_at: str
    source_counts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProjectDataset:
    project: str
    pairs: tuple[LinkPair, ...]
    manifest: DatasetManifest

    def pairs_by_id(self) -> dict[str, LinkPair]:
        return {p.pair_id: p for p in self.pairs}


def validate_dataset(dataset: ProjectDataset) -> None:
    """Re-check every dataset invariant; raise DataError naming the violation."""
    seen = set()
    n_true = n_false = 0
    for pair in dataset.pairs:
        key = (pair.issue_id, pair.commit_sha)
        if key in seen:
            raise DataError(f"duplicate pair ({pair.issue_id}, {pair.commit_sha})")
        seen.add(key)
        if pair.label == TRUE_LINK:
            n_true += 1
        else:
            n_false += 1
    if n_true != dataset.manifest.n_true:
        raise DataError(
            f"manifest says n_true={dataset.manifest.n_true}, dataset has {n_true}"
        )
    if n_false != dataset.manifest.n_false:
        raise DataError(
            f"manifest says n_false={dataset.manifest.n_false}, dataset has {n_false}"
        )


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# --- persistence ------------------------------------------------------------

_ISSUE_KEYS = (
    "title", "description", "type_raw", "type_norm", "creator",
    "created_date", "updated_date", "source",
)
_COMMIT_KEYS = (
    "message", "author", "committer", "authored_date", "committed_date",
    "status_raw", "status_norm",
)
_PAIR_KEYS = ("issue_id", "commit_sha", "label", "pair_date", "issue", "commit", "provenance")


def _pair_to_record(pair: LinkPair) -> dict:
    return {
        "issue_id": pair.issue_id,
        "commit_sha": pair.commit_sha,
        "label": pair.label,
        "pair_date": pair.pair_date.isoformat(),
        "issue": {
            "title": pair.issue.title,
            "description": pair.issue.description,
            "type_raw": pair.issue.type_raw,
            "type_norm": pair.issue.type_norm,
            "creator": pair.issue.creator,
            "created_date": pair.issue.created_date.isoformat(),
            "updated_date": pair.issue.updated_date.isoformat(),
            "source": pair.issue.source,
        },
        "commit": {
            "message": pair.commit.message,
            "author": pair.commit.author,
            "committer": pair.commit.committer,
            "authored_date": pair.commit.authored_date.isoformat(),
            "committed_date": pair.commit.committed_date.isoformat(),
            "status_raw": pair.commit.status_raw,
            "status_norm": pair.commit.status_norm,
        },
        "provenance": {
            "method": pair.provenance.method,
            "pattern": pair.provenance.pattern,
            "seed": pair.provenance.seed,
        },
    }


def manifest_path_for(path: Path, project: str) -> Path:
    return Path(path).parent / f"{project}.manifest.json"


def write_dataset(dataset: ProjectDataset, path: Path) -> None:
    """Write the dataset as JSONL plus its sibling manifest file.

    Output is byte-deterministic for a fixed dataset. Invariants are
    re-validated first; nothing is written if they fail.
    """
    validate_dataset(dataset)
    path = Path(path)
    lines = [json.dumps(_pair_to_record(p), ensure_ascii=False) for p in dataset.pairs]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    m = dataset.manifest
    manifest = {
        "project": m.project,
        "n_true": m.n_true,
        "n_false": m.n_false,
        "window_days": m.window_days,
        "seed": m.seed,
        "built_at": m.built_at,
        "source_counts": dict(sorted(m.source_counts.items())),
    }
    manifest_path_for(path, dataset.project).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def _parse_date(value, where: str) -> date:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: expected ISO date string, got {value!r}")
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _record_to_pair(record: dict, where: str) -> LinkPair:
    for key in _PAIR_KEYS:
        if key not in record:
            raise SchemaError(f"{where}: missing field {key!r}")
    for key in _ISSUE_KEYS:
        if key not in record["issue"]:
            raise SchemaError(f"{where}: missing field 'issue.{key}'")
    for key in _COMMIT_KEYS:
        if key not in record["commit"]:
            raise SchemaError(f"{where}: missing field 'commit.{key}'")
    i, c, prov = record["issue"], record["commit"], record["provenance"]
    try:
        issue = Issue(
            issue_id=record["issue_id"],
            title=i["title"],
            description=i["description"],
            type_raw=i["type_raw"],
            type_norm=i["type_norm"],
            creator=i["creator"],
            created_date=_parse_date(i["created_date"], f"{where}: issue.created_date"),
            updated_date=_parse_date(i["updated_date"], f"{where}: issue.updated_date"),
            source=i["source"],
        )
        commit = Commit(
            sha=record["commit_sha"],
            message=c["message"],
            author=c["author"],
            committer=c["committer"],
            authored_date=_parse_date(c["authored_date"], f"{where}: commit.authored_date"),
            committed_date=_parse_date(c["committed_date"], f"{where}: commit.committed_date"),
            status_raw=c["status_raw"],
            status_norm=c["status_norm"],
        )
        return LinkPair(
            issue_id=record["issue_id"],
            commit_sha=record["commit_sha"],
            label=record["label"],
            pair_date=_parse_date(record["pair_date"], f"{where}: pair_date"),
            provenance=Provenance(
                method=prov.get("method"),
                pattern=prov.get("pattern"),
                seed=prov.get("seed"),
            ),
            issue=issue,
            commit=commit,
        )
    except ValidationError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def read_dataset(path: Path) -> ProjectDataset:
    """Load a dataset file, re-validating every invariant.

    Raises SchemaError naming the offending line and field, or DataError
    when the manifest disagrees with the pair file.
    """
    path = Path(path)
    pairs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path.name} line {lineno}: invalid JSON ({exc})") from None
            pairs.append(_record_to_pair(record, f"{path.name} line {lineno}"))

    manifest = _read_manifest_for(path)
    dataset = ProjectDataset(project=manifest.project, pairs=tuple(pairs), manifest=manifest)
    validate_dataset(dataset)
    return dataset


def _read_manifest_for(path: Path) -> DatasetManifest:
    candidates = sorted(Path(path).parent.glob("*.manifest.json"))
    stem_match = Path(path).parent / f"{Path(path).stem}.manifest.json"
    if stem_match.exists():
        manifest_file = stem_match
    elif len(candidates) == 1:
        manifest_file = candidates[0]
    else:
        raise SchemaError(f"no manifest file found next to {path}")
    try:
        raw = json.loads(manifest_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{manifest_file.name}: invalid JSON ({exc})") from None
    for key in ("project", "n_true", "n_false", "window_days", "seed", "built_at"):
        if key not in raw:
            raise SchemaError(f"{manifest_file.name}: missing field {key!r}")
    return DatasetManifest(
        project=raw["project"],
        n_true=raw["n_true"],
        n_false=raw["n_false"],
        window_days=raw["window_days"],
        seed=raw["seed"],
        built_at=raw["built_at"],
        source_counts=raw.get("source_counts", {}),
    )


def _require_day(value, where: str) -> None:
    if not isinstance(value, date) or isinstance(value, datetime):
        raise ValidationError(f"{where}: expected a calendar date, got {value!r}")


# --- raw artifact files (ingest output, build input) -------------------------

def write_issues(issues: list[Issue], path: Path) -> None:
    records = [
        {
            "issue_id": i.issue_id, "title": i.title, "description": i.description,
            "type_raw": i.type_raw, "type_norm": i.type_norm, "creator": i.creator,
            "created_date": i.created_date.isoformat(),
            "updated_date": i.updated_date.isoformat(), "source": i.source,
        }
        for i in issues
    ]
    Path(path).write_text(
        json.dumps(records, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def read_issues(path: Path) -> list[Issue]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    issues = []
    for n, rec in enumerate(raw):
        try:
            issues.append(Issue(
                issue_id=rec["issue_id"], title=rec["title"],
                description=rec.get("description", ""), type_raw=rec["type_raw"],
                type_norm=rec["type_norm"], creator=rec["creator"],
                created_date=date.fromisoformat(rec["created_date"]),
                updated_date=date.fromisoformat(rec["updated_date"]),
                source=rec["source"],
            ))
        except (KeyError, ValueError, ValidationError) as exc:
            raise SchemaError(f"{path} issue record {n}: {exc}") from None
    return issues


def write_commits(commits: list[Commit], path: Path) -> None:
    records = [
        {
            "sha": c.sha, "message": c.message, "author": c.author,
            "committer": c.committer, "authored_date": c.authored_date.isoformat(),
            "committed_date": c.committed_date.isoformat(),
            "status_raw": c.status_raw, "status_norm": c.status_norm,
            "diff_text": c.diff_text,
        }
        for c in commits
    ]
    Path(path).write_text(
        json.dumps(records, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def read_commits(path: Path) -> list[Commit]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    commits = []
    for n, rec in enumerate(raw):
        try:
            commits.append(Commit(
                sha=rec["sha"], message=rec["message"], author=rec["author"],
                committer=rec["committer"],
                authored_date=date.fromisoformat(rec["authored_date"]),
                committed_date=date.fromisoformat(rec["committed_date"]),
                status_raw=rec["status_raw"], status_norm=rec["status_norm"],
                diff_text=rec.get("diff_text"),
            ))
        except (KeyError, ValueError, ValidationError) as exc:
            raise SchemaError(f"{path} commit record {n}: {exc}") from None
    return commits
