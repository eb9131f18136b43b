"""Text, categorical, and timestamp normalization.

All normalizers are total and deterministic. Mapping tables for issue types
and commit statuses ship with defaults and can be overridden per project via
a flat ``raw=category`` file.
"""

from __future__ import annotations

import logging
import re
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from .corpus import COMMIT_STATUSES, ISSUE_TYPES, Commit, Issue
from .errors import SchemaError, ValidationError

logger = logging.getLogger(__name__)

# Fixed, versioned stop-word list; recorded in manifests for reproducibility.
STOP_WORDS_VERSION = "en-v1"
STOP_WORDS = frozenset("""
a about after all also an and any are as at be because been before being but
by can could did do does down for from had has have he her here him his how i
if in into is it its just me more most my no not now of on once only or other
our out over own she should so some such than that the their them then there
these they this those through to too under until up very was we were what when
where which who why will with would you your
""".split())

_WORD_RE = re.compile(r"\w+")

# Shipped defaults; everything unmapped falls back to task / closed.
DEFAULT_TYPE_MAP = {
    "bug": "bug",
    "defect": "bug",
    "new feature": "feature",
    "improvement": "feature",
    "enhancement": "feature",
    "feature request": "feature",
    "feature": "feature",
    "task": "task",
}
DEFAULT_STATUS_MAP = {
    "closed": "closed",
    "fixed": "resolved",
    "done": "resolved",
    "resolved": "resolved",
    "complete": "resolved",
}

# The twelve features assembled for each pair.
FEATURE_NAMES = (
    "creator", "author", "committer",
    "closed", "resolved",
    "bug", "feature", "task",
    "committed_time", "authored_time", "created_date", "updated_date",
)

IDENTITY_HASH_BUCKETS = 16


def normalize_text(raw: str) -> str:
    """Lowercase, keep word tokens, drop stop words.

    Tokenization here is whitespace/punctuation level only; any subword
    tokenizer is applied later by the encoder. Idempotent, never lengthens
    the token count.
    """
    tokens = [t for t in _WORD_RE.findall(raw.lower()) if t not in STOP_WORDS]
    return " ".join(tokens)


def normalize_issue_type(type_raw: str, mapping: dict[str, str] | None = None) -> str:
    """Map a raw issue type onto {task, feature, bug}; unmapped values → task."""
    table = DEFAULT_TYPE_MAP if mapping is None else mapping
    key = type_raw.strip().lower()
    if key in table:
        return table[key]
    if key:
        logger.warning("unmapped issue type %r, defaulting to task", type_raw)
    return "task"


def normalize_commit_status(status_raw: str, mapping: dict[str, str] | None = None) -> str:
    """Map a raw commit status onto {closed, resolved}; unmapped values → closed."""
    table = DEFAULT_STATUS_MAP if mapping is None else mapping
    key = status_raw.strip().lower()
    if key in table:
        return table[key]
    if key:
        logger.warning("unmapped commit status %r, defaulting to closed", status_raw)
    return "closed"


def load_mapping_file(path: Path) -> dict[str, str]:
    """Parse a flat override file with one ``raw=category`` entry per line."""
    mapping = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError(f"{path} line {lineno}: expected raw=category, got {line!r}")
        raw, category = line.split("=", 1)
        category = category.strip().lower()
        if category not in ISSUE_TYPES | COMMIT_STATUSES:
            raise SchemaError(f"{path} line {lineno}: unknown category {category!r}")
        mapping[raw.strip().lower()] = category
    return mapping


def truncate_timestamp(value, field: str = "timestamp") -> date:
    """Convert to UTC first, then truncate to the calendar day.

    Accepts an aware datetime or an ISO-8601 string; a bare date passes
    through. Mixed-timezone day truncation is ill-defined, hence UTC-first.
    """
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, date):
        return value
    elif isinstance(value, str):
        text = value.strip().replace("Z", "+00:00")
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise ValidationError(f"unparseable {field}: {value!r}") from None
    else:
        raise ValidationError(f"unparseable {field}: {value!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).date()


def _identity_bucket(name: str) -> int:
    # Stable across processes; hash() is salted and would not be.
    import zlib

    return zlib.crc32(name.strip().encode("utf-8")) % IDENTITY_HASH_BUCKETS


def one_hot_encode(issue: Issue, commit: Commit) -> np.ndarray:
    """Fixed-order numeric vector for the lexical baseline and export.

    Layout: type one-hot (bug, feature, task), status one-hot (closed,
    resolved), then one hash bucket block each for creator, author and
    committer. Length is constant: 5 + 3 * IDENTITY_HASH_BUCKETS.
    """
    type_vec = [0.0, 0.0, 0.0]
    type_vec[("bug", "feature", "task").index(issue.type_norm)] = 1.0
    status_vec = [0.0, 0.0]
    status_vec[("closed", "resolved").index(commit.status_norm)] = 1.0

    vec = np.zeros(5 + 3 * IDENTITY_HASH_BUCKETS)
    vec[0:3] = type_vec
    vec[3:5] = status_vec
    for slot, name in enumerate((issue.creator, commit.author, commit.committer)):
        offset = 5 + slot * IDENTITY_HASH_BUCKETS
        vec[offset + _identity_bucket(name)] = 1.0
    return vec
