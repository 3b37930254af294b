"""GitHub search queries and pull-request / issue mining."""
from __future__ import annotations

import datetime as dt
import enum
import os
import re
from dataclasses import dataclass
from typing import Iterator
from urllib.parse import urlencode, quote

from .catalog import Catalog, Category, HeuristicRule, PatternKind, rules_active_at
from .commitscan import Identity, identity_matches
from .evidence import EvidenceItem
from .transport import (
    ApiError,
    AuthError,
    HttpResponse,
    HttpTransport,
    NotFoundError,
    RateBudget,
    RateLimitError,
    RequestsTransport,
    UnsupportedQueryError,
)

API_URL = "https://api.github.com"
TOKEN_ENV_VARS = ("AGENTSCAN_GITHUB_TOKEN", "GITHUB_TOKEN")

# Characters escaped inside the /regex/ of a path: search qualifier.
_REGEX_SPECIAL = set("\\.^$*+?()[]{}|-/")


class ArtifactType(str, enum.Enum):
    CODE = "code"
    COMMITS = "commits"
    PULL_REQUESTS = "pullrequests"
    ISSUES = "issues"


_SEARCH_ENDPOINT = {
    ArtifactType.CODE: "/search/code",
    ArtifactType.COMMITS: "/search/commits",
    ArtifactType.PULL_REQUESTS: "/search/issues",
    ArtifactType.ISSUES: "/search/issues",
}


class NotSearchableError(ValueError):
    pass


class PartialResultError(ApiError):
    """Pagination stopped part-way; carries what was fetched so far."""

    def __init__(self, message, records, evidence, last_complete_page: int, next_url: str, cause=None):
        super().__init__(message, getattr(cause, "status", None))
        self.records = records
        self.evidence = evidence
        self.last_complete_page = last_complete_page
        self.next_url = next_url
        self.cause = cause


@dataclass(frozen=True)
class SearchQuery:
    query_string: str
    artifact_type: ArtifactType

    def __post_init__(self):
        if not self.query_string:
            raise ValueError("empty query")

    @property
    def endpoint(self) -> str:
        return _SEARCH_ENDPOINT[self.artifact_type]

    def web_url(self) -> str:
        return "https://github.com/search?" + urlencode({"q": self.query_string, "type": self.artifact_type.value},
                                                         quote_via=quote)


@dataclass(frozen=True)
class ApproximateCount:
    value: int
    query: SearchQuery
    incomplete_results: bool = False
    approximate: bool = True


@dataclass(frozen=True)
class PrRecord:
    number: int
    head_branch: str = ""
    labels: tuple[str, ...] = ()
    author_login: str = ""
    is_draft: bool = False
    is_merged: bool = False
    is_closed: bool = False
    created_at: int | None = None
    closed_at: int | None = None

    def __post_init__(self):
        if self.number <= 0:
            raise ValueError("PR number must be positive")
        if self.is_merged and not self.is_closed:
            raise ValueError(f"PR #{self.number} merged but not closed")


def escape_regex(text: str) -> str:
    return "".join("\\" + c if c in _REGEX_SPECIAL else c for c in text)


def build_search_query(rule: HeuristicRule) -> SearchQuery:
    """The platform search query equivalent to ``rule``."""
    cat, p = rule.category, rule.pattern
    if cat is Category.FILE_PATH:
        body = escape_regex(p)
        if rule.pattern_kind is PatternKind.PATH_NAME:
            return SearchQuery(f"path:/(?:^|\\/)({body})$/", ArtifactType.CODE)
        return SearchQuery(f"path:/(?:^|\\/)({body})/", ArtifactType.CODE)
    if cat is Category.COMMIT_COAUTHOR:
        return SearchQuery(f'Co-authored-by:"{p}"', ArtifactType.COMMITS)
    if cat is Category.COMMIT_AUTHOR:
        return SearchQuery(f'author:"{p}"', ArtifactType.COMMITS)
    if cat is Category.BRANCH_PREFIX:
        return SearchQuery(f"head:{p} type:pr", ArtifactType.PULL_REQUESTS)
    if cat is Category.PR_LABEL:
        return SearchQuery(f"label:{p} type:pr", ArtifactType.PULL_REQUESTS)
    raise NotSearchableError(f"{rule.rule_id}: {cat.value} rules are matched locally, not searched")


def token_from_env(environ=None) -> str | None:
    environ = os.environ if environ is None else environ
    for name in TOKEN_ENV_VARS:
        if environ.get(name):
            return environ[name]
    return None


_LINK_NEXT_RE = re.compile(r'<([^>]+)>;\s*rel="next"')


class GitHubClient:
    """Thin REST client: auth header, rate budget, error mapping, pagination."""

    def __init__(self, transport: HttpTransport | None = None, token: str | None = None,
                 budget: RateBudget | None = None, base_url: str = API_URL):
        self.transport = transport if transport is not None else RequestsTransport()
        self.token = token
        self.budget = budget if budget is not None else RateBudget()
        self.base_url = base_url.rstrip("/")

    def get(self, path_or_url: str, params: dict | None = None) -> HttpResponse:
        url = path_or_url if path_or_url.startswith("http") else self.base_url + path_or_url
        if params:
            url += ("&" if "?" in url else "?") + urlencode(params)
        headers = {"Accept": "application/vnd.github+json", "X-GitHub-Api-Version": "2022-11-28"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        self.budget.acquire()
        resp = self.transport.request("GET", url, headers)
        self.budget.update(resp)
        _raise_for_status(resp, url, self.budget)
        return resp

    def paginate(self, path: str, params: dict, per_page: int) -> Iterator[tuple[int, str | None, list]]:
        """Yield (page_number, next_url, items) for each page, following Link headers."""
        url = self.first_page_url(path, params, per_page)
        page = 0
        while url:
            resp = self.get(url)
            items = resp.json() or []
            page += 1
            m = _LINK_NEXT_RE.search(resp.header("link", "") or "")
            url = m.group(1) if m else None
            yield page, url, items

    def first_page_url(self, path: str, params: dict, per_page: int) -> str:
        return self.base_url + path + "?" + urlencode({**params, "per_page": per_page})


def as_client(transport_or_client) -> GitHubClient:
    if isinstance(transport_or_client, GitHubClient):
        return transport_or_client
    return GitHubClient(transport_or_client, token=token_from_env())


def _raise_for_status(resp: HttpResponse, url: str, budget: RateBudget) -> None:
    s = resp.status
    if s < 400:
        return
    msg = _error_message(resp) or f"HTTP {s}"
    if s in (403, 429):
        raise RateLimitError(f"rate limited: {msg}", reset_at=budget.reset_at or None, status=s)
    if s == 401:
        raise AuthError(f"authentication failed: {msg}", s)
    if s == 404:
        raise NotFoundError(f"not found: {url}", s)
    if s == 422:
        raise UnsupportedQueryError(f"query rejected: {msg}", s)
    raise ApiError(f"{msg} ({url})", s)


def _error_message(resp: HttpResponse) -> str:
    try:
        doc = resp.json()
    except ValueError:
        return ""
    return doc.get("message", "") if isinstance(doc, dict) else ""


def count_matches(query: SearchQuery, transport) -> ApproximateCount:
    """Platform-reported ``total_count`` for a search query (approximate)."""
    client = as_client(transport)
    doc = client.get(query.endpoint, {"q": query.query_string, "per_page": 1}).json()
    return ApproximateCount(int(doc.get("total_count", 0)), query, bool(doc.get("incomplete_results", False)))


# -- PR / issue mining --------------------------------------------------------

def _ts(value: str | None) -> int | None:
    if not value:
        return None
    return int(dt.datetime.fromisoformat(value.replace("Z", "+00:00")).timestamp())


def _date(ts: int | None) -> dt.date | None:
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc).date() if ts else None


def pr_from_api(item: dict) -> PrRecord:
    merged = bool(item.get("merged_at"))
    return PrRecord(
        number=int(item["number"]),
        head_branch=(item.get("head") or {}).get("ref", ""),
        labels=tuple(lbl["name"] if isinstance(lbl, dict) else str(lbl) for lbl in item.get("labels", [])),
        author_login=(item.get("user") or {}).get("login", ""),
        is_draft=bool(item.get("draft", False)),
        is_merged=merged,
        is_closed=item.get("state") == "closed" or merged,
        created_at=_ts(item.get("created_at")),
        closed_at=_ts(item.get("closed_at")),
    )


def login_matches(login: str, rule: HeuristicRule) -> bool:
    return identity_matches(Identity(name=login), rule)


def pr_evidence(pr: PrRecord, catalog: Catalog) -> list[EvidenceItem]:
    out = []
    for agent, rule in rules_active_at(catalog, _date(pr.created_at)):
        cat = rule.category
        if cat is Category.BRANCH_PREFIX:
            hit = pr.head_branch.startswith(rule.pattern)
        elif cat is Category.PR_LABEL:
            hit = any(lbl.casefold() == rule.pattern.casefold() for lbl in pr.labels)
        elif cat is Category.USER_NAME:
            hit = login_matches(pr.author_login, rule)
        else:
            continue
        if hit:
            out.append(EvidenceItem(agent.id, rule.rule_id, cat, str(pr.number), pr.created_at, "pr"))
    return out


def fetch_pr_evidence(repo: str, catalog: Catalog, transport, *, per_page: int = 100
                      ) -> tuple[list[PrRecord], list[EvidenceItem]]:
    """Page through every PR of ``owner/name`` and match branch, label and author rules."""
    client = as_client(transport)
    records: list[PrRecord] = []
    evidence: list[EvidenceItem] = []
    path, params = f"/repos/{repo}/pulls", {"state": "all"}
    last_page, next_url = 0, client.first_page_url(path, params, per_page)
    try:
        for page, url, items in client.paginate(path, params, per_page):
            for item in items:
                pr = pr_from_api(item)
                records.append(pr)
                evidence.extend(pr_evidence(pr, catalog))
            last_page, next_url = page, url
    except NotFoundError:
        if last_page == 0:
            raise NotFoundError(f"repository {repo} not found", 404) from None
        raise
    except ApiError as e:
        if last_page == 0:
            raise
        raise PartialResultError(f"pagination failed after page {last_page}: {e}",
                                 records, evidence, last_page, next_url, e) from e
    return records, evidence


def _mentions(body: str, login: str) -> bool:
    return re.search(r"(?<![\w@-])@" + re.escape(login) + r"(?![\w-])", body or "", re.IGNORECASE) is not None


def fetch_issue_evidence(repo: str, catalog: Catalog, transport, *, per_page: int = 100) -> list[EvidenceItem]:
    """Evidence of agent users assigned to, commenting on, or mentioned in issues."""
    client = as_client(transport)
    user_rules = [(a, r) for a, r in rules_active_at(catalog, None) if r.category is Category.USER_NAME]
    evidence: list[EvidenceItem] = []
    path, params = f"/repos/{repo}/issues", {"state": "all"}
    last_page, next_url = 0, client.first_page_url(path, params, per_page)
    try:
        for page, url, items in client.paginate(path, params, per_page):
            for item in items:
                if "pull_request" in item:
                    continue
                evidence.extend(_issue_evidence(client, item, user_rules, per_page))
            last_page, next_url = page, url
    except NotFoundError:
        if last_page == 0:
            raise NotFoundError(f"repository {repo} not found", 404) from None
        raise
    except ApiError as e:
        if last_page == 0:
            raise
        raise PartialResultError(f"pagination failed after page {last_page}: {e}",
                                 [], evidence, last_page, next_url, e) from e
    return evidence


def _issue_evidence(client: GitHubClient, item: dict, user_rules, per_page: int) -> list[EvidenceItem]:
    number = str(item["number"])
    created = _ts(item.get("created_at"))
    logins = {a["login"] for a in item.get("assignees") or [] if a}
    if item.get("assignee"):
        logins.add(item["assignee"]["login"])
    if item.get("comments"):
        path = item.get("comments_url") or f"/repos/{item.get('repository', '')}/issues/{number}/comments"
        for _, _, comments in client.paginate(_strip_base(client, path), {}, per_page):
            logins.update((c.get("user") or {}).get("login", "") for c in comments)
    body = item.get("body") or ""
    out = []
    for agent, rule in user_rules:
        if any(login_matches(login, rule) for login in logins) or _mentions(body, rule.pattern):
            out.append(EvidenceItem(agent.id, rule.rule_id, rule.category, number, created, "issue"))
    return out


def _strip_base(client: GitHubClient, url: str) -> str:
    return url[len(client.base_url):] if url.startswith(client.base_url) else url
