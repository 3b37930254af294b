"""Agent configuration/guidance file detection in repository trees."""
from __future__ import annotations

import datetime as dt
import enum
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

from .catalog import Catalog, Category, HeuristicRule, PatternKind, rules_active_at
from .evidence import EvidenceItem
from .ignorefile import is_ignored, parse_ignore_file


class EntryKind(str, enum.Enum):
    FILE = "file"
    DIRECTORY = "directory"


@dataclass(frozen=True)
class TreeEntry:
    path: str
    kind: EntryKind = EntryKind.FILE

    def __post_init__(self):
        if not self.path or self.path.startswith("/"):
            raise ValueError(f"invalid tree path {self.path!r}")
        if any(seg in (".", "..", "") for seg in self.path.rstrip("/").split("/")):
            raise ValueError(f"invalid tree path {self.path!r}")


@dataclass
class ObservabilityFlags:
    ignored_agent_files: list[tuple[str, str]] = field(default_factory=list)  # (ignore line, rule_id)
    commit_markers_absent_but_files_present: bool = False

    @property
    def ignored_rule_ids(self) -> list[str]:
        return sorted({rid for _, rid in self.ignored_agent_files})


@lru_cache(maxsize=1024)
def _path_regex(kind: PatternKind, pattern: str) -> re.Pattern:
    # Same anchoring as the platform search queries: (?:^|/) before the
    # pattern; names are end-anchored, directory prefixes are not.
    body = re.escape(pattern)
    if kind is PatternKind.PATH_NAME:
        return re.compile(r"(?:^|/)" + body + r"$")
    return re.compile(r"(?:^|/)" + body)


def match_path(path: str, rule: HeuristicRule, *, is_dir: bool = False) -> bool:
    """Whether a repository path is covered by a FilePath rule.

    Matching is case-sensitive. A name rule matches the trailing path
    segment(s); a directory-prefix rule matches a run of segments starting
    at any directory boundary (so ``.cursor/`` matches anything under a
    ``.cursor`` directory, and ``.github/workflows/claude`` matches workflow
    files whose name starts with ``claude``).
    """
    if rule.category is not Category.FILE_PATH:
        raise ValueError(f"{rule.rule_id} is not a file rule")
    if is_dir and not path.endswith("/"):
        path += "/"
    return _path_regex(rule.pattern_kind, rule.pattern).search(path) is not None


def _file_rules(catalog: Catalog, at_date: dt.date | None):
    return [(a, r) for a, r in rules_active_at(catalog, at_date) if r.category is Category.FILE_PATH]


def scan_tree(
    entries: Iterable[TreeEntry | str],
    catalog: Catalog,
    at_date: dt.date | None = None,
    *,
    observed_at: int | None = None,
) -> list[EvidenceItem]:
    """Evidence for every (file rule, path) match in one revision's tree."""
    rules = _file_rules(catalog, at_date)
    seen = set()
    out = []
    for entry in entries:
        if isinstance(entry, str):
            entry = TreeEntry(entry)
        path = entry.path.rstrip("/")
        is_dir = entry.kind is EntryKind.DIRECTORY
        for agent, rule in rules:
            if (rule.rule_id, path) in seen:
                continue
            if match_path(path, rule, is_dir=is_dir):
                seen.add((rule.rule_id, path))
                out.append(EvidenceItem(agent.id, rule.rule_id, rule.category, path, observed_at, "tree"))
    return out


def canonical_probe_path(rule: HeuristicRule) -> str:
    """A root-level path the rule would match, used to test ignore files."""
    if rule.pattern_kind is PatternKind.PATH_DIR_PREFIX:
        if rule.pattern.endswith("/"):
            return rule.pattern + "x"
        return rule.pattern + ".yml"
    return rule.pattern


def detect_reduced_observability(
    ignore_lines,
    catalog: Catalog,
    probe_paths: dict[str, str] | None = None,
    at_date: dt.date | None = None,
) -> ObservabilityFlags:
    """Flag file rules whose canonical root-level path is ignored.

    ``probe_paths`` maps rule_id to the path to test; by default every
    file rule gets its canonical probe path.
    """
    ruleset = parse_ignore_file(ignore_lines)
    flags = ObservabilityFlags()
    for _, rule in _file_rules(catalog, at_date):
        probe = (probe_paths or {}).get(rule.rule_id) or canonical_probe_path(rule)
        if not is_ignored(ruleset, probe, False):
            continue
        flags.ignored_agent_files.append((_responsible_line(ruleset, probe), rule.rule_id))
    return flags


def _responsible_line(ruleset, path: str) -> str:
    parts = path.split("/")
    for k in range(1, len(parts)):
        p = ruleset.match("/".join(parts[:k]), True)
        if p is not None and not p.negated:
            return p.line
    p = ruleset.match(path, False)
    return p.line if p is not None else ""
