"""Heuristic catalog: data model, JSON loading/serialization, validation.

The catalog is a plain JSON document. Every rule belongs to exactly one
agent descriptor; one descriptor is the ``generic`` pseudo-agent that owns
markers shared across tools.
"""
from __future__ import annotations

import datetime as dt
import enum
import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable

SCHEMA_VERSION = 1

_AGENT_ID_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")


class Category(str, enum.Enum):
    FILE_PATH = "file_path"
    COMMIT_COAUTHOR = "commit_coauthor"
    COMMIT_AUTHOR = "commit_author"
    BRANCH_PREFIX = "branch_prefix"
    PR_LABEL = "pr_label"
    USER_NAME = "user_name"


class PatternKind(str, enum.Enum):
    LITERAL = "literal"
    PATH_NAME = "path_name"
    PATH_DIR_PREFIX = "path_dir_prefix"
    SUBSTRING = "substring"


class Confidence(str, enum.Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


ALLOWED_KINDS: dict[Category, frozenset[PatternKind]] = {
    Category.FILE_PATH: frozenset({PatternKind.PATH_NAME, PatternKind.PATH_DIR_PREFIX}),
    Category.COMMIT_COAUTHOR: frozenset({PatternKind.LITERAL, PatternKind.SUBSTRING}),
    Category.COMMIT_AUTHOR: frozenset({PatternKind.LITERAL, PatternKind.SUBSTRING}),
    Category.USER_NAME: frozenset({PatternKind.LITERAL, PatternKind.SUBSTRING}),
    Category.BRANCH_PREFIX: frozenset({PatternKind.LITERAL}),
    Category.PR_LABEL: frozenset({PatternKind.LITERAL}),
}


class CatalogError(ValueError):
    """Base class for catalog loading failures."""


class CatalogParseError(CatalogError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class CatalogValidationError(CatalogError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        first = diagnostics[0]
        super().__init__(f"{first.subject}: {first.message}"
                         + (f" (+{len(diagnostics) - 1} more)" if len(diagnostics) > 1 else ""))


@dataclass(frozen=True)
class HeuristicRule:
    rule_id: str
    category: Category
    pattern_kind: PatternKind
    pattern: str
    valid_from: dt.date | None = None
    valid_to: dt.date | None = None
    confidence: Confidence = Confidence.HIGH
    notes: str = ""

    def active_at(self, date: dt.date) -> bool:
        if self.valid_from is not None and self.valid_from > date:
            return False
        if self.valid_to is not None and self.valid_to < date:
            return False
        return True


@dataclass(frozen=True)
class AgentDescriptor:
    id: str
    display_name: str
    homepage: str = ""
    generic: bool = False
    rules: tuple[HeuristicRule, ...] = ()
    notes: str = ""


@dataclass(frozen=True)
class Catalog:
    schema_version: int
    generated_on: dt.date
    agents: tuple[AgentDescriptor, ...] = ()

    @property
    def version(self) -> str:
        """Short identifier recorded in reports and exclusion lists."""
        return f"{self.schema_version}:{self.generated_on.isoformat()}"

    def agent(self, agent_id: str) -> AgentDescriptor:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def rule(self, rule_id: str) -> HeuristicRule:
        for _, r in self.iter_rules():
            if r.rule_id == rule_id:
                return r
        raise KeyError(rule_id)

    def iter_rules(self) -> Iterable[tuple[AgentDescriptor, HeuristicRule]]:
        for a in self.agents:
            for r in a.rules:
                yield a, r

    @property
    def generic_agent(self) -> AgentDescriptor | None:
        return next((a for a in self.agents if a.generic), None)


@dataclass(frozen=True)
class Diagnostic:
    subject: str  # rule_id or agent id
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.subject}: {self.message}"


# -- validation ---------------------------------------------------------------

def validate_catalog(catalog: Catalog, *, require_generic: bool | None = None) -> list[Diagnostic]:
    """Check every catalog invariant; an empty list means the catalog is valid.

    Exactly one generic descriptor is required once the catalog has any
    agents (an empty catalog is vacuously valid) unless ``require_generic``
    says otherwise.
    """
    diags: list[Diagnostic] = []
    if require_generic is None:
        require_generic = bool(catalog.agents)

    seen_agents: set[str] = set()
    for a in catalog.agents:
        if not a.id or not _AGENT_ID_RE.match(a.id):
            diags.append(Diagnostic(a.id or "<empty>", "error", "agent id must match [a-z0-9][a-z0-9-]*"))
        if a.id in seen_agents:
            diags.append(Diagnostic(a.id, "error", "duplicate agent id"))
        seen_agents.add(a.id)

    n_generic = sum(1 for a in catalog.agents if a.generic)
    if require_generic and n_generic != 1:
        diags.append(Diagnostic("<catalog>", "error",
                                f"expected exactly one generic agent, found {n_generic}"))
    elif n_generic > 1:
        diags.append(Diagnostic("<catalog>", "error", f"{n_generic} generic agents"))

    seen_rules: set[str] = set()
    owners: dict[tuple[Category, PatternKind, str], AgentDescriptor] = {}
    for a, r in catalog.iter_rules():
        if r.rule_id in seen_rules:
            diags.append(Diagnostic(r.rule_id, "error", "duplicate rule_id"))
        seen_rules.add(r.rule_id)
        if not r.rule_id:
            diags.append(Diagnostic(a.id, "error", "rule with empty rule_id"))
        if not r.pattern:
            diags.append(Diagnostic(r.rule_id, "error", "empty pattern"))
        if r.valid_from and r.valid_to and r.valid_from > r.valid_to:
            diags.append(Diagnostic(r.rule_id, "error",
                                    f"valid_from {r.valid_from} is after valid_to {r.valid_to}"))
        if r.pattern_kind not in ALLOWED_KINDS[r.category]:
            diags.append(Diagnostic(r.rule_id, "error",
                                    f"pattern_kind {r.pattern_kind.value} not allowed for {r.category.value}"))
        key = (r.category, r.pattern_kind, r.pattern)
        other = owners.get(key)
        if other is not None and other.id != a.id and not (other.generic or a.generic):
            diags.append(Diagnostic(r.rule_id, "error",
                                    f"pattern {r.pattern!r} also claimed by agent {other.id!r}; "
                                    "shared markers belong to the generic agent"))
        owners.setdefault(key, a)
    return diags


def rules_active_at(catalog: Catalog, date: dt.date | None) -> list[tuple[AgentDescriptor, HeuristicRule]]:
    """Rules whose validity window contains ``date``.

    ``date=None`` means the date is unknown: only open-window rules apply.
    """
    if date is None:
        return [(a, r) for a, r in catalog.iter_rules() if r.valid_from is None and r.valid_to is None]
    return [(a, r) for a, r in catalog.iter_rules() if r.active_at(date)]


# -- (de)serialization --------------------------------------------------------

def _parse_date(value, where: str) -> dt.date | None:
    if value is None:
        return None
    try:
        return dt.date.fromisoformat(value)
    except (TypeError, ValueError):
        raise CatalogParseError(f"{where}: invalid date {value!r}") from None


def _enum(cls, value, where: str):
    try:
        return cls(value)
    except ValueError:
        raise CatalogParseError(f"{where}: invalid {cls.__name__} {value!r}") from None


def catalog_from_dict(doc: dict) -> Catalog:
    if not isinstance(doc, dict):
        raise CatalogParseError("catalog document must be a JSON object")
    agents = []
    for i, ad in enumerate(doc.get("agents", [])):
        where = f"agents[{i}]"
        rules = []
        for j, rd in enumerate(ad.get("rules", [])):
            rwhere = f"{where}.rules[{j}]"
            try:
                rules.append(HeuristicRule(
                    rule_id=rd["rule_id"],
                    category=_enum(Category, rd["category"], rwhere),
                    pattern_kind=_enum(PatternKind, rd["pattern_kind"], rwhere),
                    pattern=rd["pattern"],
                    valid_from=_parse_date(rd.get("valid_from"), rwhere),
                    valid_to=_parse_date(rd.get("valid_to"), rwhere),
                    confidence=_enum(Confidence, rd.get("confidence", "high"), rwhere),
                    notes=rd.get("notes", ""),
                ))
            except KeyError as e:
                raise CatalogParseError(f"{rwhere}: missing field {e.args[0]!r}") from None
        try:
            agents.append(AgentDescriptor(
                id=ad["id"],
                display_name=ad.get("display_name", ad["id"]),
                homepage=ad.get("homepage", ""),
                generic=bool(ad.get("generic", False)),
                rules=tuple(rules),
                notes=ad.get("notes", ""),
            ))
        except KeyError as e:
            raise CatalogParseError(f"{where}: missing field {e.args[0]!r}") from None
    generated_on = _parse_date(doc.get("generated_on"), "generated_on") or dt.date(1970, 1, 1)
    return Catalog(schema_version=int(doc.get("schema_version", SCHEMA_VERSION)),
                   generated_on=generated_on, agents=tuple(agents))


def load_catalog(source: IO[bytes] | bytes | str) -> Catalog:
    """Parse and validate a catalog document.

    Raises CatalogParseError (with line/column) on malformed JSON and
    CatalogValidationError on invariant violations. Unknown keys are ignored.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CatalogParseError(f"catalog is not UTF-8: {e}") from None
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as e:
        raise CatalogParseError(e.msg, e.lineno, e.colno) from None
    catalog = catalog_from_dict(doc)
    errors = [d for d in validate_catalog(catalog) if d.severity == "error"]
    if errors:
        raise CatalogValidationError(errors)
    return catalog


def rule_to_dict(r: HeuristicRule) -> dict:
    return {
        "rule_id": r.rule_id,
        "category": r.category.value,
        "pattern_kind": r.pattern_kind.value,
        "pattern": r.pattern,
        "valid_from": r.valid_from.isoformat() if r.valid_from else None,
        "valid_to": r.valid_to.isoformat() if r.valid_to else None,
        "confidence": r.confidence.value,
        "notes": r.notes,
    }


def catalog_to_dict(catalog: Catalog) -> dict:
    agents = []
    for a in catalog.agents:
        d = {"id": a.id, "display_name": a.display_name, "homepage": a.homepage, "generic": a.generic}
        if a.notes:
            d["notes"] = a.notes
        d["rules"] = [rule_to_dict(r) for r in a.rules]
        agents.append(d)
    return {
        "schema_version": catalog.schema_version,
        "generated_on": catalog.generated_on.isoformat(),
        "agents": agents,
    }


def dump_catalog(catalog: Catalog) -> bytes:
    return (json.dumps(catalog_to_dict(catalog), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


_BUILTIN: Catalog | None = None


def builtin_catalog() -> Catalog:
    """The shipped catalog of agent heuristics (35 descriptors)."""
    global _BUILTIN
    if _BUILTIN is None:
        data = resources.files("agentscan").joinpath("data/catalog.json").read_bytes()
        _BUILTIN = load_catalog(data)
    return _BUILTIN
