from datetime import date, timedelta

import pytest

from linkkit.corpus import Commit, Issue
from linkkit.errors import IngestionError, ValidationError
from linkkit.ingestion import (
    SourceConfig,
    derive_patterns,
    extract_true_links,
    fetch_commits,
    fetch_issues,
    match_references,
)
from synthcorpus import random_grid_corpus, shared_token_corpus


def _iso(day, hour=9):
    return f"{day.isoformat()}T{hour:02d}:00:00Z"


class FakeGitHubTransport:
    """Pages GraphQL responses out of in-memory commit/issue lists."""

    def __init__(self, commits=(), issues=()):
        self.commits = list(commits)
        self.issues = list(issues)
        self.requests = 0

    def _commit_node(self, c: Commit):
        return {
            "oid": c.sha,
            "message": c.message,
            "authoredDate": _iso(c.authored_date),
            "committedDate": _iso(c.committed_date),
            "author": {"name": c.author, "email": f"{c.author}@x", "user": {"login": c.author}},
            "committer": {"name": c.committer, "email": "", "user": {"login": c.committer}},
        }

    def _issue_node(self, i: Issue, number: int):
        return {
            "number": number,
            "title": i.title,
            "body": i.description,
            "createdAt": _iso(i.created_date),
            "updatedAt": _iso(i.updated_date),
            "author": {"login": i.creator},
            "labels": {"nodes": [{"name": i.type_raw}] if i.type_raw else []},
        }

    def request(self, method, url, params=None, json_body=None, headers=None):
        self.requests += 1
        variables = json_body["variables"]
        page_size = variables["pageSize"]
        cursor = variables["cursor"]
        offset = int(cursor) if cursor else 0
        if "history" in json_body["query"]:
            items = [self._commit_node(c) for c in self.commits]
            field = "history"
        else:
            items = [
                self._issue_node(i, int(i.issue_id.lstrip("#")))
                for i in self.issues
            ]
            field = "issues"
        page = items[offset:offset + page_size]
        connection = {
            "pageInfo": {
                "hasNextPage": offset + page_size < len(items),
                "endCursor": str(offset + page_size),
            },
            "nodes": page,
        }
        if field == "history":
            data = {"repository": {"defaultBranchRef": {"target": {"history": connection}}}}
        else:
            data = {"repository": {"issues": connection}}
        return 200, {"data": data}


class EmptyRepoTransport:
    def __init__(self):
        self.requests = 0

    def request(self, method, url, params=None, json_body=None, headers=None):
        self.requests += 1
        if "history" in json_body["query"]:
            return 200, {"data": {"repository": {"defaultBranchRef": None}}}
        return 200, {"data": {"repository": {"issues": {
            "pageInfo": {"hasNextPage": False, "endCursor": None}, "nodes": [],
        }}}}


class FakeJiraTransport:
    def __init__(self, issues=()):
        self.issues = list(issues)
        self.requests = 0

    def request(self, method, url, params=None, json_body=None, headers=None):
        self.requests += 1
        start = params["startAt"]
        page = self.issues[start:start + params["maxResults"]]
        return 200, {
            "total": len(self.issues),
            "issues": [
                {
                    "key": i.issue_id,
                    "fields": {
                        "summary": i.title,
                        "description": i.description,
                        "issuetype": {"name": i.type_raw},
                        "creator": {"displayName": i.creator},
                        "created": _iso(i.created_date),
                        "updated": _iso(i.updated_date),
                    },
                }
                for i in page
            ],
        }


class RateLimitedTransport:
    def __init__(self, failures, inner):
        self.failures = failures
        self.inner = inner
        self.requests = 0

    def request(self, *args, **kwargs):
        self.requests += 1
        if self.requests <= self.failures:
            return 429, {}
        return self.inner.request(*args, **kwargs)


class AuthFailingTransport:
    def request(self, *args, **kwargs):
        return 401, {}


@pytest.fixture
def github_cfg(tmp_path):
    return SourceConfig(
        project="DEMO", repo_slug="acme/demo", its="github",
        cache_dir=tmp_path / "cache", page_size=100,
    )


@pytest.fixture(autouse=True)
def _tokens(monkeypatch):
    monkeypatch.setenv("LINKKIT_GITHUB_TOKEN", "gh-token")
    monkeypatch.setenv("LINKKIT_JIRA_USER", "user")
    monkeypatch.setenv("LINKKIT_JIRA_TOKEN", "jira-token")


def test_source_config_requires_jira_fields(tmp_path):
    with pytest.raises(ValidationError, match="jira_base_url"):
        SourceConfig(project="P", repo_slug="a/b", its="jira", cache_dir=tmp_path)


def test_fetch_commits_empty_repository(github_cfg):
    assert fetch_commits(github_cfg, transport=EmptyRepoTransport()) == []


def test_fetch_commits_paginates_exactly(github_cfg):
    _, commits = random_grid_corpus("DEMO", 1, 250, seed=9, day_span=300)
    transport = FakeGitHubTransport(commits=commits)
    fetched = fetch_commits(github_cfg, transport=transport)
    assert transport.requests == 3
    assert len(fetched) == 250


def test_fetch_commits_sorted_and_cache_hit(github_cfg):
    _, commits = random_grid_corpus("DEMO", 1, 120, seed=10, day_span=200)
    first = fetch_commits(github_cfg, transport=FakeGitHubTransport(commits=commits))
    assert first == sorted(first, key=lambda c: (c.authored_date, c.sha))

    cold = FakeGitHubTransport(commits=commits)
    second = fetch_commits(github_cfg, transport=cold)
    assert cold.requests == 0
    assert second == first


def test_fetch_issues_empty(github_cfg):
    assert fetch_issues(github_cfg, transport=EmptyRepoTransport()) == []


def test_fetch_issues_github_maps_fields(github_cfg):
    issues = [Issue("#7", "Crash on save", "details", "bug", "bug", "alice",
                    date(2021, 5, 1), date(2021, 5, 2), "github")]
    fetched = fetch_issues(github_cfg, transport=FakeGitHubTransport(issues=issues))
    assert fetched[0].issue_id == "#7"
    assert fetched[0].creator == "alice"
    assert fetched[0].source == "github"


def test_fetch_issues_jira_preserves_raw_type(tmp_path):
    cfg = SourceConfig(
        project="PROJ", repo_slug="acme/proj", its="jira",
        jira_base_url="https://jira.example.com", jira_project_key="PROJ",
        cache_dir=tmp_path / "cache", page_size=50,
    )
    base = date(2021, 1, 1)
    issues = [Issue(f"PROJ-{i}", f"title {i}", "", "Improvement", "feature",
                    f"dev{i}", base + timedelta(days=i), base + timedelta(days=i + 1),
                    "jira")
              for i in range(120)]
    transport = FakeJiraTransport(issues=issues)
    fetched = fetch_issues(cfg, transport=transport)
    assert transport.requests == 3  # 120 issues / 50 per page
    assert len(fetched) == 120
    assert fetched[0].type_raw == "Improvement"
    assert fetched[0].type_norm == "feature"

    warm = FakeJiraTransport(issues=issues)
    again = fetch_issues(cfg, transport=warm)
    assert warm.requests == 0
    assert again == fetched


def test_rate_limit_backoff_then_success(github_cfg):
    _, commits = random_grid_corpus("DEMO", 1, 5, seed=3)
    naps = []
    transport = RateLimitedTransport(2, FakeGitHubTransport(commits=commits))
    fetched = fetch_commits(github_cfg, transport=transport, sleep=naps.append)
    assert len(fetched) == 5
    assert naps == [1.0, 2.0]


def test_rate_limit_exhausts_retries(github_cfg):
    transport = RateLimitedTransport(100, FakeGitHubTransport())
    with pytest.raises(IngestionError, match="after 5 retries"):
        fetch_commits(github_cfg, transport=transport, sleep=lambda _: None)


def test_auth_failure_names_env_var(github_cfg):
    with pytest.raises(IngestionError, match="LINKKIT_GITHUB_TOKEN"):
        fetch_commits(github_cfg, transport=AuthFailingTransport())


def test_missing_token_names_env_var(github_cfg, monkeypatch):
    monkeypatch.delenv("LINKKIT_GITHUB_TOKEN")
    with pytest.raises(IngestionError, match="LINKKIT_GITHUB_TOKEN"):
        fetch_commits(github_cfg, transport=FakeGitHubTransport())


# --- true-link extraction -----------------------------------------------------

def _issue(issue_id, creator="alice", day=date(2021, 3, 1)):
    return Issue(issue_id, f"title {issue_id}", "", "Bug", "bug", creator, day, day,
                 "jira" if "-" in issue_id else "github")


def _commit(sha, message, day=date(2021, 3, 2), author="bob"):
    return Commit(sha * 40, message, author, author, day, day, "closed", "closed")


def test_extract_single_reference():
    issues = [_issue("PROJ-123")]
    commits = [_commit("a", "Fix NPE, closes PROJ-123")]
    links = extract_true_links(issues, commits)
    assert len(links) == 1
    assert links[0].issue_id == "PROJ-123"
    assert links[0].label == "true_link"
    assert links[0].provenance.method == "id_reference"


def test_reference_to_unknown_issue_ignored():
    issues = [_issue("PROJ-123")]
    commits = [_commit("a", "cleanup, relates to PROJ-999")]
    assert extract_true_links(issues, commits) == []


def test_planted_references_enumerated_by_hand():
    # 5 issues, 6 commits, 4 planted references (one commit references two
    # issues, one reference points outside the corpus, one commit is silent).
    issues = [_issue(f"PL-{i}") for i in range(1, 6)]
    commits = [
        _commit("a", "implement parser for PL-1"),
        _commit("b", "PL-2 and PL-3 share a root cause"),
        _commit("c", "no reference here"),
        _commit("d", "tidy up whitespace in PL-9"),
        _commit("e", "address review comments on PL-4"),
        _commit("f", "bump version"),
    ]
    links = extract_true_links(issues, commits)
    expected = {
        ("PL-1", "a" * 40),
        ("PL-2", "b" * 40),
        ("PL-3", "b" * 40),
        ("PL-4", "e" * 40),
    }
    assert {(l.issue_id, l.commit_sha) for l in links} == expected


def test_extract_output_within_product_and_pattern_matches():
    issues, commits = shared_token_corpus("REF", n_links=30, seed=2)
    patterns = derive_patterns(issues)
    by_name = {p.name: p for p in patterns}
    links = extract_true_links(issues, commits, patterns)
    issue_ids = {i.issue_id for i in issues}
    shas = {c.sha for c in commits}
    message_by_sha = {c.sha: c.message for c in commits}
    assert links
    for link in links:
        assert link.issue_id in issue_ids and link.commit_sha in shas
        pattern = by_name[link.provenance.pattern]
        assert link.issue_id in pattern.find_ids(message_by_sha[link.commit_sha])


def test_github_patterns_prefer_keyword_form():
    issues = [_issue("#12"), _issue("#40")]
    patterns = derive_patterns(issues)
    refs = match_references("Fixes #12 and touches #40", patterns)
    assert refs["#12"] == "github:keyword"
    assert refs["#40"] == "github:id-ref"


def test_duplicate_references_collapse():
    issues = [_issue("PROJ-5")]
    commits = [_commit("a", "PROJ-5 PROJ-5 fix PROJ-5 again")]
    assert len(extract_true_links(issues, commits)) == 1


def test_jira_key_requires_word_boundary():
    issues = [_issue("AB-12")]
    patterns = derive_patterns(issues)
    # XAB-12 must not register as an AB reference; AB-123 is a well-formed
    # reference (to an id outside this corpus, filtered later).
    assert match_references("see XAB-12 and AB-123", patterns) == {"AB-123": "jira:AB"}
    assert match_references("see AB-12.", patterns) == {"AB-12": "jira:AB"}
    assert "AB-12" not in match_references("XAB-12 only", patterns)
