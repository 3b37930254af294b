"""Detect, classify and report coding-agent activity in software repositories."""
from __future__ import annotations

__version__ = "0.1.0"

from .catalog import (
    AgentDescriptor,
    Catalog,
    Category,
    Confidence,
    HeuristicRule,
    PatternKind,
    builtin_catalog,
    load_catalog,
    rules_active_at,
    validate_catalog,
)
from .classify import AdoptionLevel, AdoptionReport, build_report, classify_adoption, exclusion_list, merge_rate
from .commitscan import CommitRecord, Identity, match_commit, parse_coauthor, parse_trailers, scan_history
from .evidence import EvidenceItem
from .ghminer import PrRecord, SearchQuery, build_search_query, count_matches, fetch_issue_evidence, fetch_pr_evidence
from .ignorefile import is_ignored, parse_ignore_file
from .treescan import TreeEntry, detect_reduced_observability, match_path, scan_tree

__all__ = [
    "AdoptionLevel", "AdoptionReport", "AgentDescriptor", "Catalog", "Category", "CommitRecord", "Confidence",
    "EvidenceItem", "HeuristicRule", "Identity", "PatternKind", "PrRecord", "SearchQuery", "TreeEntry",
    "build_report", "build_search_query", "builtin_catalog", "classify_adoption", "count_matches",
    "detect_reduced_observability", "exclusion_list", "fetch_issue_evidence", "fetch_pr_evidence", "is_ignored",
    "load_catalog", "match_commit", "match_path", "merge_rate", "parse_coauthor", "parse_ignore_file",
    "parse_trailers", "rules_active_at", "scan_history", "scan_tree", "validate_catalog",
]
