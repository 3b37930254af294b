"""Evidence fusion: adoption reports, merge rates, exclusion lists, rendering."""
from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .catalog import Category
from .commitscan import CommitScanSummary
from .evidence import EvidenceItem
from .ghminer import PrRecord
from .treescan import ObservabilityFlags

PERVASIVE_THRESHOLD = 0.5


class AdoptionLevel(str, enum.Enum):
    NONE = "none"
    CONFIGURED_ONLY = "configured_only"
    EXPERIMENTAL = "experimental"
    PERVASIVE = "pervasive"

    @property
    def rank(self) -> int:
        return _LEVEL_ORDER.index(self)


_LEVEL_ORDER = [AdoptionLevel.NONE, AdoptionLevel.CONFIGURED_ONLY,
                AdoptionLevel.EXPERIMENTAL, AdoptionLevel.PERVASIVE]

# report column per evidence category; issue evidence is counted separately
_COLUMN = {
    Category.FILE_PATH: "files",
    Category.COMMIT_COAUTHOR: "commits_coauthor",
    Category.COMMIT_AUTHOR: "commits_author",
    Category.BRANCH_PREFIX: "branches",
    Category.PR_LABEL: "labels",
    Category.USER_NAME: "users",
}
COUNT_COLUMNS = ("files", "commits_coauthor", "commits_author", "branches", "labels", "users", "issues")


class ReportConsistencyError(ValueError):
    pass


def classify_adoption(
    summary: CommitScanSummary | None,
    file_evidence: Sequence[EvidenceItem] = (),
    pr_evidence: Sequence[EvidenceItem] = (),
    issue_evidence: Sequence[EvidenceItem] = (),
    *,
    threshold: float = PERVASIVE_THRESHOLD,
) -> AdoptionLevel:
    commit_ev = summary.evidence if summary is not None else ()
    if not (commit_ev or file_evidence or pr_evidence or issue_evidence):
        return AdoptionLevel.NONE
    if not (commit_ev or pr_evidence or issue_evidence):
        return AdoptionLevel.CONFIGURED_ONLY
    share = summary.agent_commit_share if summary is not None else 0.0
    if share > threshold:
        return AdoptionLevel.PERVASIVE
    return AdoptionLevel.EXPERIMENTAL


def merge_rate(prs: Iterable[PrRecord], exclude_drafts: bool = False) -> float | None:
    """Share of closed PRs that were merged; ``None`` when no PR qualifies."""
    considered = merged = 0
    for pr in prs:
        if not pr.is_closed:
            continue
        if exclude_drafts and pr.is_draft:
            continue
        considered += 1
        merged += pr.is_merged
    if considered == 0:
        return None
    return merged / considered


@dataclass
class AgentStats:
    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(COUNT_COLUMNS, 0))
    first_seen: int | None = None
    last_seen: int | None = None


@dataclass
class AdoptionReport:
    repo_id: str
    scanned_at: int
    catalog_version: str
    adoption_level: AdoptionLevel
    agent_commit_share: float
    per_agent: dict[str, AgentStats] = field(default_factory=dict)
    ignored_agent_rules: list[str] = field(default_factory=list)
    files_without_commit_markers: bool = False


def build_report(
    repo_id: str,
    *,
    summary: CommitScanSummary | None = None,
    file_evidence: Sequence[EvidenceItem] = (),
    pr_evidence: Sequence[EvidenceItem] = (),
    issue_evidence: Sequence[EvidenceItem] = (),
    flags: ObservabilityFlags | None = None,
    catalog_version: str = "",
    scanned_at: int = 0,
    threshold: float = PERVASIVE_THRESHOLD,
    input_repo_ids: Iterable[str] = (),
) -> AdoptionReport:
    """Fuse every evidence stream of one repository into a report.

    ``input_repo_ids`` lists the repository id each input stream was produced
    for; any mismatch with ``repo_id`` is a consistency error.
    """
    bad = sorted({r for r in input_repo_ids if r != repo_id})
    if bad:
        raise ReportConsistencyError(f"inputs for {bad} mixed into report for {repo_id!r}")

    commit_ev = sorted(summary.evidence) if summary is not None else []
    per_agent: dict[str, AgentStats] = {}

    def add(ev: EvidenceItem, column: str):
        st = per_agent.setdefault(ev.agent_id, AgentStats())
        st.counts[column] += 1
        if ev.observed_at is not None:
            st.first_seen = ev.observed_at if st.first_seen is None else min(st.first_seen, ev.observed_at)
            st.last_seen = ev.observed_at if st.last_seen is None else max(st.last_seen, ev.observed_at)

    for ev in [*commit_ev, *file_evidence, *pr_evidence]:
        add(ev, _COLUMN[ev.category])
    for ev in issue_evidence:
        add(ev, "issues")

    flags = flags if flags is not None else ObservabilityFlags()
    files_only = bool(file_evidence) and not commit_ev
    share = summary.agent_commit_share if summary is not None else 0.0
    level = classify_adoption(summary, file_evidence, pr_evidence, issue_evidence, threshold=threshold)
    return AdoptionReport(
        repo_id=repo_id,
        scanned_at=scanned_at,
        catalog_version=catalog_version,
        adoption_level=level,
        agent_commit_share=round(share, 4),
        per_agent=dict(sorted(per_agent.items())),
        ignored_agent_rules=flags.ignored_rule_ids,
        files_without_commit_markers=files_only,
    )


# -- exclusion lists ----------------------------------------------------------

@dataclass
class ExclusionList:
    repo_id: str
    commit_hashes: list[str] = field(default_factory=list)
    pr_numbers: list[int] = field(default_factory=list)
    catalog_version: str = ""
    scanned_at: int = 0

    def to_json(self, emit: str = "both") -> bytes:
        doc: dict = {"repo_id": self.repo_id,
                     "generated_from": {"catalog_version": self.catalog_version,
                                        "scanned_at": _iso(self.scanned_at)}}
        if emit in ("commits", "both"):
            doc["commit_hashes"] = self.commit_hashes
        if emit in ("prs", "both"):
            doc["pr_numbers"] = self.pr_numbers
        return (json.dumps(doc, indent=2) + "\n").encode()

    def to_lines(self, emit: str = "commits") -> bytes:
        lines = []
        if emit in ("commits", "both"):
            lines += self.commit_hashes
        if emit in ("prs", "both"):
            lines += [f"#{n}" for n in self.pr_numbers]
        return "".join(line + "\n" for line in lines).encode()


def exclusion_list(
    repo_id: str,
    evidence: Iterable[EvidenceItem],
    *,
    catalog_version: str = "",
    scanned_at: int = 0,
) -> ExclusionList:
    """Commit hashes and PR numbers that carry agent evidence."""
    hashes, prs = set(), set()
    for ev in evidence:
        if ev.source == "commit":
            hashes.add(ev.locator)
        elif ev.source == "pr":
            prs.add(int(ev.locator))
    return ExclusionList(repo_id, sorted(hashes), sorted(prs), catalog_version, scanned_at)


# -- rendering ----------------------------------------------------------------

def _iso(ts: int | None) -> str | None:
    if ts is None:
        return None
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _from_iso(value: str | None) -> int | None:
    if value is None:
        return None
    return int(dt.datetime.fromisoformat(value.replace("Z", "+00:00")).timestamp())


def report_to_dict(report: AdoptionReport) -> dict:
    agents = {}
    for aid, st in report.per_agent.items():
        agents[aid] = {**st.counts, "first_seen": _iso(st.first_seen), "last_seen": _iso(st.last_seen)}
    return {
        "repo_id": report.repo_id,
        "scanned_at": _iso(report.scanned_at),
        "catalog_version": report.catalog_version,
        "adoption_level": report.adoption_level.value,
        "agent_commit_share": round(report.agent_commit_share, 4),
        "agents": agents,
        "observability": {
            "ignored_agent_rules": list(report.ignored_agent_rules),
            "files_without_commit_markers": report.files_without_commit_markers,
        },
    }


def report_from_dict(doc: dict) -> AdoptionReport:
    per_agent = {}
    for aid, d in doc["agents"].items():
        per_agent[aid] = AgentStats({c: int(d.get(c, 0)) for c in COUNT_COLUMNS},
                                    _from_iso(d.get("first_seen")), _from_iso(d.get("last_seen")))
    obs = doc.get("observability", {})
    return AdoptionReport(
        repo_id=doc["repo_id"],
        scanned_at=_from_iso(doc["scanned_at"]) or 0,
        catalog_version=doc.get("catalog_version", ""),
        adoption_level=AdoptionLevel(doc["adoption_level"]),
        agent_commit_share=float(doc["agent_commit_share"]),
        per_agent=per_agent,
        ignored_agent_rules=list(obs.get("ignored_agent_rules", [])),
        files_without_commit_markers=bool(obs.get("files_without_commit_markers", False)),
    )


def render_report(report: AdoptionReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report_to_dict(report), indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["repo_id", "adoption_level", "agent_commit_share", "agent_id", *COUNT_COLUMNS,
                    "first_seen", "last_seen"])
        share = f"{report.agent_commit_share:.4f}"
        for aid, st in report.per_agent.items():
            w.writerow([report.repo_id, report.adoption_level.value, share, aid,
                        *(st.counts[c] for c in COUNT_COLUMNS),
                        _iso(st.first_seen) or "", _iso(st.last_seen) or ""])
        return buf.getvalue().encode()
    if fmt == "text":
        return _render_text(report).encode()
    raise ValueError(f"unknown format {fmt!r}")


def _render_text(report: AdoptionReport) -> str:
    lines = [
        f"repository:   {report.repo_id}",
        f"scanned at:   {_iso(report.scanned_at)}",
        f"catalog:      {report.catalog_version}",
        f"adoption:     {report.adoption_level.value}",
        f"agent share:  {report.agent_commit_share:.4f}",
    ]
    if report.per_agent:
        lines.append("agents:")
        for aid, st in report.per_agent.items():
            nonzero = ", ".join(f"{c}={n}" for c, n in st.counts.items() if n)
            span = ""
            if st.first_seen is not None:
                span = f" [{_iso(st.first_seen)} .. {_iso(st.last_seen)}]"
            lines.append(f"  {aid}: {nonzero}{span}")
    if report.ignored_agent_rules:
        lines.append("ignored agent files: " + ", ".join(report.ignored_agent_rules))
    if report.files_without_commit_markers:
        lines.append("note: agent files present but no commit-level markers")
    return "\n".join(lines) + "\n"
