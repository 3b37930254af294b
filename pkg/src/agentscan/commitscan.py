"""Commit trailer parsing and commit-identity matching."""
from __future__ import annotations

import datetime as dt
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .catalog import AgentDescriptor, Catalog, Category, HeuristicRule, PatternKind, rules_active_at
from .evidence import EvidenceItem

# Regular trailer keys have no whitespace. "Generated by" is the one spaced key
# agents are known to emit; it is normalized to "Generated-by".
_TRAILER_RE = re.compile(r"^(?P<key>[A-Za-z0-9][A-Za-z0-9-]*|[Gg]enerated [Bb]y)\s*:\s*(?P<value>.*)$")
_HEX_RE = re.compile(r"^(?:[0-9a-f]{40}|[0-9a-f]{64})$")
_LAX_COAUTHOR_RE = re.compile(r"^\s*co-authored-by\s*:(.*)$", re.IGNORECASE | re.MULTILINE)
_BOT_SUFFIX = "[bot]"

IDENTITY_TRAILER_KEYS = frozenset({"co-authored-by", "generated-by"})


@dataclass(frozen=True)
class Identity:
    name: str = ""
    email: str = ""

    def __eq__(self, other):
        if not isinstance(other, Identity):
            return NotImplemented
        return (self.name.casefold(), self.email.casefold()) == (other.name.casefold(), other.email.casefold())

    def __hash__(self):
        return hash((self.name.casefold(), self.email.casefold()))

    @property
    def empty(self) -> bool:
        return not self.name and not self.email


@dataclass(frozen=True)
class Trailer:
    key: str
    value: str


@dataclass(frozen=True)
class CommitRecord:
    hash: str
    author: Identity = Identity()
    committer: Identity = Identity()
    timestamp: int = 0
    message: str = ""
    parents: tuple[str, ...] = ()

    def __post_init__(self):
        if not _HEX_RE.match(self.hash):
            raise ValueError(f"invalid commit hash {self.hash!r}")
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp for {self.hash}")

    @property
    def date(self) -> dt.date | None:
        if not self.timestamp:
            return None
        return dt.datetime.fromtimestamp(self.timestamp, tz=dt.timezone.utc).date()


def _paragraphs(message: str) -> list[list[str]]:
    paras: list[list[str]] = []
    cur: list[str] = []
    for line in message.replace("\r\n", "\n").split("\n"):
        if line.strip():
            cur.append(line.rstrip())
        elif cur:
            paras.append(cur)
            cur = []
    if cur:
        paras.append(cur)
    return paras


def parse_trailers(message: str) -> list[Trailer]:
    """Trailers from the final paragraph of ``message``.

    The final paragraph counts as a trailer block only if it is not the
    subject paragraph and every line is either ``Key: value`` or an indented
    continuation of the previous trailer.
    """
    paras = _paragraphs(message)
    if len(paras) < 2:
        return []
    trailers: list[list[str]] = []
    for line in paras[-1]:
        if line[:1] in (" ", "\t"):
            if not trailers:
                return []
            trailers[-1][1] += " " + line.strip()
            continue
        m = _TRAILER_RE.match(line)
        if not m:
            return []
        key = m.group("key").replace(" ", "-")
        trailers.append([key, m.group("value").strip()])
    return [Trailer(k, v) for k, v in trailers]


def parse_coauthor(value: str) -> Identity:
    """Split a ``Name <email>`` trailer value.

    A bare token containing ``@`` is taken as an email; anything else
    without angle brackets is a name.
    """
    value = value.strip()
    if not value:
        return Identity()
    lt = value.find("<")
    if lt != -1:
        gt = value.find(">", lt)
        email = value[lt + 1:gt if gt != -1 else len(value)].strip()
        return Identity(name=value[:lt].strip(), email=email)
    if "@" in value and " " not in value:
        return Identity(email=value)
    return Identity(name=value)


def _field_matches(text: str, rule: HeuristicRule) -> bool:
    if not text:
        return False
    folded = text.casefold()
    pat = rule.pattern.casefold()
    if rule.pattern_kind is PatternKind.SUBSTRING:
        return pat in folded
    if folded == pat:
        return True
    return folded.endswith(_BOT_SUFFIX) and folded[: -len(_BOT_SUFFIX)] == pat


def identity_matches(identity: Identity, rule: HeuristicRule) -> bool:
    """Case-insensitive match of ``rule`` against either identity field."""
    return _field_matches(identity.name, rule) or _field_matches(identity.email, rule)


def commit_identities(message: str, *, lax: bool = False) -> list[Identity]:
    """Co-author style identities advertised by a commit message."""
    out = []
    for t in parse_trailers(message):
        key = t.key.casefold()
        if key == "co-authored-by":
            out.append(parse_coauthor(t.value))
        elif key == "generated-by":
            out.append(Identity(name=t.value.strip()))
    if lax:
        out.extend(parse_coauthor(v) for v in _LAX_COAUTHOR_RE.findall(message))
    return [i for i in out if not i.empty]


def match_commit(
    commit: CommitRecord,
    active_rules: Sequence[tuple[AgentDescriptor, HeuristicRule]],
    *,
    lax: bool = False,
) -> list[EvidenceItem]:
    coauthors = commit_identities(commit.message, lax=lax)
    seen = set()
    out = []
    for agent, rule in active_rules:
        if rule.category is Category.COMMIT_COAUTHOR:
            hit = any(identity_matches(i, rule) for i in coauthors)
        elif rule.category is Category.COMMIT_AUTHOR:
            hit = identity_matches(commit.author, rule)
        else:
            continue
        if hit and (agent.id, rule.rule_id) not in seen:
            seen.add((agent.id, rule.rule_id))
            out.append(EvidenceItem(agent.id, rule.rule_id, rule.category, commit.hash,
                                    commit.timestamp or None, "commit"))
    return out


@dataclass
class CommitScanSummary:
    """Mergeable aggregate of a commit scan.

    Merging partial summaries is commutative and associative, so any split
    or ordering of the commit stream yields the same result.
    """

    total_commits: int = 0
    evidence: set[EvidenceItem] = field(default_factory=set)

    @property
    def matched_commits(self) -> set[str]:
        return {e.locator for e in self.evidence}

    @property
    def agent_commit_count(self) -> int:
        return len(self.matched_commits)

    @property
    def agent_commit_share(self) -> float:
        if self.total_commits == 0:
            return 0.0
        return self.agent_commit_count / self.total_commits

    def evidence_by_agent(self) -> dict[str, list[EvidenceItem]]:
        out: dict[str, list[EvidenceItem]] = {}
        for e in sorted(self.evidence, key=_evidence_sort_key):
            out.setdefault(e.agent_id, []).append(e)
        return out

    def commits_by_agent(self) -> dict[str, int]:
        return {a: len({e.locator for e in evs}) for a, evs in self.evidence_by_agent().items()}

    def first_last(self) -> dict[str, tuple[int | None, int | None]]:
        out = {}
        for a, evs in self.evidence_by_agent().items():
            ts = [e.observed_at for e in evs if e.observed_at is not None]
            out[a] = (min(ts), max(ts)) if ts else (None, None)
        return out

    def merge(self, other: CommitScanSummary) -> CommitScanSummary:
        return CommitScanSummary(self.total_commits + other.total_commits, self.evidence | other.evidence)

    def __eq__(self, other):
        if not isinstance(other, CommitScanSummary):
            return NotImplemented
        return self.total_commits == other.total_commits and self.evidence == other.evidence


def _evidence_sort_key(e: EvidenceItem):
    return (e.agent_id, e.observed_at or 0, e.locator, e.rule_id)


class _RuleCache:
    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self._by_date: dict[dt.date | None, list] = {}

    def __call__(self, date: dt.date | None):
        rules = self._by_date.get(date)
        if rules is None:
            rules = [(a, r) for a, r in rules_active_at(self.catalog, date)
                     if r.category in (Category.COMMIT_COAUTHOR, Category.COMMIT_AUTHOR)]
            self._by_date[date] = rules
        return rules


def _scan_chunk(args) -> CommitScanSummary:
    commits, catalog, lax = args
    rules_for = _RuleCache(catalog)
    summary = CommitScanSummary()
    for c in commits:
        summary.total_commits += 1
        summary.evidence.update(match_commit(c, rules_for(c.date), lax=lax))
    return summary


def scan_history(
    commits: Iterable[CommitRecord],
    catalog: Catalog,
    *,
    lax: bool = False,
    jobs: int = 1,
    chunk_size: int = 2000,
) -> CommitScanSummary:
    """Match every commit against the commit rules active at its date."""
    if jobs <= 1:
        return _scan_chunk((commits, catalog, lax))
    commits = list(commits)
    chunks = [(commits[i:i + chunk_size], catalog, lax) for i in range(0, len(commits), chunk_size)]
    summary = CommitScanSummary()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_scan_chunk, chunks):
            summary = summary.merge(part)
    return summary
