"""Issue and commit acquisition plus true-link extraction.

Fetchers talk to the GitHub GraphQL API and the Jira REST API through a
small transport object so tests can substitute doubles. Every raw response
is cached under ``<cache_dir>/<project>/<request-hash>.json``; a warm cache
answers reruns with zero network requests and identical output.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .corpus import TRUE_LINK, Commit, Issue, LinkPair, Provenance, make_pair
from .errors import IngestionError, ValidationError
from .preprocess import normalize_commit_status, normalize_issue_type, truncate_timestamp

logger = logging.getLogger(__name__)

GITHUB_GRAPHQL_URL = "https://api.github.com/graphql"
GITHUB_TOKEN_VAR = "LINKKIT_GITHUB_TOKEN"
JIRA_USER_VAR = "LINKKIT_JIRA_USER"
JIRA_TOKEN_VAR = "LINKKIT_JIRA_TOKEN"

_RATE_LIMIT_STATUSES = (403, 429)


@dataclass(frozen=True)
class SourceConfig:
    """Where one project's issues and commits come from."""

    project: str
    repo_slug: str
    its: str
    jira_base_url: str | None = None
    jira_project_key: str | None = None
    cache_dir: Path = Path(".linkkit-cache")
    page_size: int = 100
    max_retries: int = 5

    def __post_init__(self):
        if self.its not in ("jira", "github"):
            raise ValidationError(f"its must be jira or github, got {self.its!r}")
        if self.its == "jira" and not (self.jira_base_url and self.jira_project_key):
            raise ValidationError(
                "its=jira requires jira_base_url and jira_project_key"
            )
        if "/" not in self.repo_slug:
            raise ValidationError(f"repo_slug must be owner/name, got {self.repo_slug!r}")


class RequestsTransport:
    """Thin requests wrapper: (method, url, params, body, headers) -> (status, json)."""

    def __init__(self, timeout: float = 30.0):
        import requests

        self._session = requests.Session()
        self._timeout = timeout

    def request(self, method, url, params=None, json_body=None, headers=None):
        resp = self._session.request(
            method, url, params=params, json=json_body, headers=headers,
            timeout=self._timeout,
        )
        try:
            payload = resp.json()
        except ValueError:
            payload = {}
        return resp.status_code, payload


def _request_hash(method, url, params, json_body) -> str:
    material = json.dumps(
        {"method": method, "url": url, "params": params, "body": json_body},
        sort_keys=True,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:32]


def _cached_request(cfg: SourceConfig, transport, method, url, *, params=None,
                    json_body=None, headers=None, sleep: Callable = time.sleep,
                    env_var: str = GITHUB_TOKEN_VAR):
    """Serve from cache when possible; otherwise fetch with bounded backoff."""
    cache_file = Path(cfg.cache_dir) / cfg.project / (
        _request_hash(method, url, params, json_body) + ".json"
    )
    if cache_file.exists():
        return json.loads(cache_file.read_text(encoding="utf-8"))

    for attempt in range(cfg.max_retries + 1):
        status, payload = transport.request(
            method, url, params=params, json_body=json_body, headers=headers
        )
        if status == 401:
            raise IngestionError(
                f"authentication failed ({status}) for {url}; check {env_var}"
            )
        if status in _RATE_LIMIT_STATUSES:
            if attempt == cfg.max_retries:
                raise IngestionError(
                    f"rate limited on {url} after {cfg.max_retries} retries"
                )
            delay = min(2.0 ** attempt, 60.0)
            logger.warning("rate limited (%d), retrying in %.1fs", status, delay)
            sleep(delay)
            continue
        if status != 200:
            raise IngestionError(f"unexpected status {status} from {url}")
        cache_file.parent.mkdir(parents=True, exist_ok=True)
        cache_file.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        return payload
    raise IngestionError(f"unreachable retry loop for {url}")


def _github_headers(auth: str | None) -> dict:
    token = auth or os.environ.get(GITHUB_TOKEN_VAR)
    if not token:
        raise IngestionError(f"no GitHub token; set {GITHUB_TOKEN_VAR}")
    return {"Authorization": f"Bearer {token}"}


def _jira_headers(auth: str | None) -> dict:
    user = os.environ.get(JIRA_USER_VAR)
    token = auth or os.environ.get(JIRA_TOKEN_VAR)
    if not (user and token):
        raise IngestionError(f"no Jira credentials; set {JIRA_USER_VAR} and {JIRA_TOKEN_VAR}")
    digest = base64.b64encode(f"{user}:{token}".encode("utf-8")).decode("ascii")
    return {"Authorization": f"Basic {digest}"}


_COMMITS_QUERY = """
query($owner: String!, $name: String!, $pageSize: Int!, $cursor: String) {
  repository(owner: $owner, name: $name) {
    defaultBranchRef {
      target {
        ... on Commit {
          history(first: $pageSize, after: $cursor) {
            pageInfo { hasNextPage endCursor }
            nodes {
              oid
              message
              authoredDate
              committedDate
              author { name email user { login } }
              committer { name email user { login } }
            }
          }
        }
      }
    }
  }
}
"""

_ISSUES_QUERY = """
query($owner: String!, $name: String!, $pageSize: Int!, $cursor: String) {
  repository(owner: $owner, name: $name) {
    issues(first: $pageSize, after: $cursor, orderBy: {field: CREATED_AT, direction: ASC}) {
      pageInfo { hasNextPage endCursor }
      nodes {
        number
        title
        body
        createdAt
        updatedAt
        author { login }
        labels(first: 10) { nodes { name } }
      }
    }
  }
}
"""


def _git_identity(actor: dict | None) -> str:
    if not actor:
        return ""
    user = actor.get("user") or {}
    return user.get("login") or actor.get("name") or actor.get("email") or ""


def fetch_commits(cfg: SourceConfig, auth: str | None = None, transport=None,
                  sleep: Callable = time.sleep) -> list[Commit]:
    """All default-branch commits, sorted by (authored_date, sha)."""
    transport = transport or RequestsTransport()
    headers = _github_headers(auth)
    owner, name = cfg.repo_slug.split("/", 1)
    commits: list[Commit] = []
    cursor = None
    while True:
        body = {
            "query": _COMMITS_QUERY,
            "variables": {"owner": owner, "name": name,
                          "pageSize": cfg.page_size, "cursor": cursor},
        }
        payload = _cached_request(
            cfg, transport, "POST", GITHUB_GRAPHQL_URL,
            json_body=body, headers=headers, sleep=sleep,
        )
        if payload.get("errors"):
            raise IngestionError(f"GraphQL errors: {payload['errors']}")
        ref = (payload.get("data", {}).get("repository") or {}).get("defaultBranchRef")
        if ref is None:
            break  # empty repository
        history = ref["target"]["history"]
        for node in history["nodes"]:
            commits.append(Commit(
                sha=node["oid"],
                message=node.get("message", ""),
                author=_git_identity(node.get("author")),
                committer=_git_identity(node.get("committer")),
                authored_date=truncate_timestamp(node["authoredDate"], "authoredDate"),
                committed_date=truncate_timestamp(node["committedDate"], "committedDate"),
                status_raw="closed",
                status_norm=normalize_commit_status("closed"),
            ))
        if not history["pageInfo"]["hasNextPage"]:
            break
        cursor = history["pageInfo"]["endCursor"]
    commits.sort(key=lambda c: (c.authored_date, c.sha))
    return commits


def fetch_issues(cfg: SourceConfig, auth: str | None = None, transport=None,
                 sleep: Callable = time.sleep) -> list[Issue]:
    """All issues for the project, sorted by (created_date, issue_id)."""
    transport = transport or RequestsTransport()
    if cfg.its == "github":
        issues = _fetch_github_issues(cfg, auth, transport, sleep)
    else:
        issues = _fetch_jira_issues(cfg, auth, transport, sleep)
    issues.sort(key=lambda i: (i.created_date, i.issue_id))
    return issues


def _fetch_github_issues(cfg, auth, transport, sleep) -> list[Issue]:
    headers = _github_headers(auth)
    owner, name = cfg.repo_slug.split("/", 1)
    issues: list[Issue] = []
    cursor = None
    while True:
        body = {
            "query": _ISSUES_QUERY,
            "variables": {"owner": owner, "name": name,
                          "pageSize": cfg.page_size, "cursor": cursor},
        }
        payload = _cached_request(
            cfg, transport, "POST", GITHUB_GRAPHQL_URL,
            json_body=body, headers=headers, sleep=sleep,
        )
        if payload.get("errors"):
            raise IngestionError(f"GraphQL errors: {payload['errors']}")
        conn = (payload.get("data", {}).get("repository") or {}).get("issues")
        if conn is None:
            break
        for node in conn["nodes"]:
            labels = [l["name"] for l in node.get("labels", {}).get("nodes", [])]
            type_raw = labels[0] if labels else ""
            created = truncate_timestamp(node["createdAt"], "createdAt")
            updated = truncate_timestamp(node["updatedAt"], "updatedAt")
            issues.append(Issue(
                issue_id=f"#{node['number']}",
                title=node.get("title", ""),
                description=node.get("body") or "",
                type_raw=type_raw,
                type_norm=normalize_issue_type(type_raw),
                creator=(node.get("author") or {}).get("login", ""),
                created_date=created,
                updated_date=max(created, updated),
                source="github",
            ))
        if not conn["pageInfo"]["hasNextPage"]:
            break
        cursor = conn["pageInfo"]["endCursor"]
    return issues


def _fetch_jira_issues(cfg, auth, transport, sleep) -> list[Issue]:
    headers = _jira_headers(auth)
    url = cfg.jira_base_url.rstrip("/") + "/rest/api/2/search"
    issues: list[Issue] = []
    start_at = 0
    while True:
        params = {
            "jql": f"project = {cfg.jira_project_key} ORDER BY created ASC",
            "startAt": start_at,
            "maxResults": cfg.page_size,
        }
        payload = _cached_request(
            cfg, transport, "GET", url, params=params, headers=headers,
            sleep=sleep, env_var=JIRA_TOKEN_VAR,
        )
        batch = payload.get("issues", [])
        for item in batch:
            fields = item.get("fields", {})
            type_raw = (fields.get("issuetype") or {}).get("name", "")
            creator = (fields.get("creator") or {})
            created = truncate_timestamp(fields["created"], "created")
            updated = truncate_timestamp(fields.get("updated", fields["created"]), "updated")
            issues.append(Issue(
                issue_id=item["key"],
                title=fields.get("summary", ""),
                description=fields.get("description") or "",
                type_raw=type_raw,
                type_norm=normalize_issue_type(type_raw),
                creator=creator.get("displayName") or creator.get("name") or "",
                created_date=created,
                updated_date=max(created, updated),
                source="jira",
            ))
        total = payload.get("total", len(issues))
        start_at += len(batch)
        if not batch or start_at >= total:
            break
    return issues


# --- true-link extraction ----------------------------------------------------

@dataclass(frozen=True)
class ReferencePattern:
    """A compiled issue-reference pattern plus its canonical-id rewrite."""

    name: str
    regex: re.Pattern
    group_to_id: Callable[[re.Match], str] = field(compare=False)

    def find_ids(self, text: str) -> list[str]:
        return [self.group_to_id(m) for m in self.regex.finditer(text)]


_JIRA_ID_RE = re.compile(r"^([A-Z][A-Z0-9_]*)-\d+$")
_GITHUB_ID_RE = re.compile(r"^#\d+$")


def derive_patterns(issues: list[Issue]) -> list[ReferencePattern]:
    """Default per-project reference patterns inferred from the issue ids.

    Jira-keyed projects match ``KEY-123`` with word boundaries; GitHub-ITS
    projects match ``#123`` plus the fix/close/resolve keyword forms
    (case-insensitive). Keyword forms come first so the recorded pattern
    names the most specific match.
    """
    patterns: list[ReferencePattern] = []
    jira_keys = sorted({
        m.group(1) for i in issues if (m := _JIRA_ID_RE.match(i.issue_id))
    })
    for key in jira_keys:
        patterns.append(ReferencePattern(
            name=f"jira:{key}",
            regex=re.compile(rf"\b{re.escape(key)}-(\d+)\b"),
            group_to_id=lambda m, key=key: f"{key}-{m.group(1)}",
        ))
    if any(_GITHUB_ID_RE.match(i.issue_id) for i in issues):
        patterns.append(ReferencePattern(
            name="github:keyword",
            regex=re.compile(
                r"\b(?:fix(?:es|ed)?|close(?:s|d)?|resolve(?:s|d)?)\s+#(\d+)\b",
                re.IGNORECASE,
            ),
            group_to_id=lambda m: f"#{m.group(1)}",
        ))
        patterns.append(ReferencePattern(
            name="github:id-ref",
            regex=re.compile(r"(?<![\w#])#(\d+)\b"),
            group_to_id=lambda m: f"#{m.group(1)}",
        ))
    return patterns


def match_references(text: str, patterns: list[ReferencePattern]) -> dict[str, str]:
    """Map each referenced issue id to the name of the first pattern hitting it."""
    found: dict[str, str] = {}
    for pattern in patterns:
        for issue_id in pattern.find_ids(text):
            found.setdefault(issue_id, pattern.name)
    return found


def extract_true_links(issues: list[Issue], commits: list[Commit],
                       patterns: list[ReferencePattern] | None = None) -> list[LinkPair]:
    """One true_link per (issue, commit) where the commit message references
    the issue id; duplicates collapsed, output sorted for determinism."""
    if patterns is None:
        patterns = derive_patterns(issues)
    by_id = {i.issue_id: i for i in issues}
    pairs: list[LinkPair] = []
    seen: set[tuple[str, str]] = set()
    for commit in commits:
        refs = match_references(commit.message, patterns)
        for issue_id in sorted(refs):
            issue = by_id.get(issue_id)
            if issue is None or (issue_id, commit.sha) in seen:
                continue
            seen.add((issue_id, commit.sha))
            pairs.append(make_pair(
                issue, commit, TRUE_LINK,
                Provenance(method="id_reference", pattern=refs[issue_id]),
            ))
    pairs.sort(key=lambda p: (p.pair_date, p.issue_id, p.commit_sha))
    return pairs
