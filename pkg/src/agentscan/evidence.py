from __future__ import annotations

from dataclasses import dataclass

from .catalog import Category


@dataclass(frozen=True, order=True)
class EvidenceItem:
    """One rule matched against one repository artifact.

    ``locator`` identifies the artifact: a commit hash, a tree path, a branch
    name, a PR or issue number (as a decimal string), or a user login.
    """

    agent_id: str
    rule_id: str
    category: Category
    locator: str
    observed_at: int | None = None
    source: str = ""  # "commit", "tree", "pr", "issue"

    def key(self) -> tuple[str, str, str]:
        return (self.agent_id, self.rule_id, self.locator)


def dedupe(items) -> list[EvidenceItem]:
    """Drop repeated (agent_id, rule_id, locator) triples, keeping the first."""
    seen: set[tuple[str, str, str]] = set()
    out = []
    for ev in items:
        k = ev.key()
        if k not in seen:
            seen.add(k)
            out.append(ev)
    return out
