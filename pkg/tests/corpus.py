"""Synthetic repository corpus with planted agent traces, plus an oracle.

The generator writes real git repositories and a manifest of what it
planted. The oracle recomputes evidence without going through agentscan's
parsing or matching code: trailers come from ``git interpret-trailers``,
file rules are evaluated with the regexes embedded in the published search
queries, and ignore checks use ``git check-ignore``.
"""
from __future__ import annotations

import random
import re
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from conftest import commit, git, init_repo
from table1 import CELLS

HUMANS = [("Alice Martin", "alice@example.org"), ("Bob Stone", "bob@corp.example"),
          ("Chen Wei", "chen@example.net"), ("Dana Ruiz", "dana@uni.example")]

# (agent_id, trailer value) pairs; planted with random casing
AGENT_COAUTHORS = [
    ("claude-code", "Claude <noreply@anthropic.com>"),
    ("aider", "aider (gpt-4o) <aider@aider.chat>"),
    ("aider", "aider <noreply@aider.example>"),
    ("cursor", "Cursor Agent <cursoragent@cursor.com>"),
    ("copilot", "Copilot <198982749+Copilot@users.noreply.github.com>"),
    ("gemini", "gemini-code-assist[bot] <176961590+gemini-code-assist[bot]@users.noreply.github.com>"),
    ("opencode", "opencode <noreply@opencode.ai>"),
    ("devin", "devin-ai-integration[bot] <158243242+devin-ai-integration[bot]@users.noreply.github.com>"),
    ("amp", "Amp <amp@ampcode.com>"),
    ("qwen-coder", "Qwen-Coder <qwen-coder@alibabacloud.com>"),
]
AGENT_AUTHORS = [("claude-code", ("Claude", "claude-bot@example.dev")),
                 ("openhands", ("openhands-agent", "openhands@example.dev"))]

AGENT_FILES = [
    ("claude-code", "CLAUDE.md"), ("claude-code", ".claude/settings.json"),
    ("claude-code", ".github/workflows/claude-review.yml"), ("generic", "AGENTS.md"),
    ("cursor", ".cursor/rules/style.mdc"), ("cursor", ".cursorrules"), ("gemini", "GEMINI.md"),
    ("gemini", ".gemini/config.yaml"), ("kiro", ".kiro/specs/a.md"), ("windsurf", ".windsurfrules"),
    ("copilot", ".github/copilot-instructions.md"), ("aider", ".aider.conf.yml"),
    ("speckit", ".specify/memory/constitution.md"), ("warp", "WARP.md"),
]
DECOY_FILES = ["MYCLAUDE.md", "claude.md", "docs/agents.md", "cursor.txt", "src/claude_utils.py",
               "notes/GEMINI.md.bak", "README.md", ".github/workflows/ci.yml"]
IGNORE_CHOICES = ["CLAUDE.md", ".claude/", ".cursor/", "*.mdc", "GEMINI.md", ".windsurfrules",
                  "AGENTS.md", "build/", "*.log", "!AGENTS.md", "**/.kiro/", "/WARP.md"]


@dataclass
class PlantedRepo:
    path: Path
    commits: dict[str, str | None] = field(default_factory=dict)  # hash -> planted agent id
    files: set[tuple[str, str]] = field(default_factory=set)  # (agent_id, path) committed at HEAD
    ignore_lines: list[str] = field(default_factory=list)


def _random_case(rng: random.Random, text: str) -> str:
    mode = rng.randrange(4)
    if mode == 0:
        return text
    if mode == 1:
        return text.lower()
    if mode == 2:
        return text.upper()
    return "".join(c.upper() if rng.random() < 0.5 else c.lower() for c in text)


def _message(rng: random.Random, subject: str, trailers: list[str], decoy_body: bool) -> str:
    parts = [subject]
    if decoy_body or rng.random() < 0.5:
        body = "Refactor the parser.\n"
        if decoy_body:
            # a quoted co-author line outside the trailer block
            body += "As discussed, Co-authored-by: Claude <noreply@anthropic.com> was wrong.\n"
        parts.append(body.rstrip())
    if trailers:
        parts.append("\n".join(trailers))
    return "\n\n".join(parts) + "\n"


def make_repo(root: Path, idx: int, rng: random.Random) -> PlantedRepo:
    repo = PlantedRepo(init_repo(root / f"repo{idx:02d}"))
    t = 1_740_000_000 + idx * 1_000_000

    n_ignore = rng.randrange(0, 4)
    repo.ignore_lines = rng.sample(IGNORE_CHOICES, n_ignore)
    planted_files = rng.sample(AGENT_FILES, rng.randrange(0, 5))
    decoys = rng.sample(DECOY_FILES, rng.randrange(1, 4))
    files = {".gitignore": "\n".join(repo.ignore_lines) + "\n"}
    for agent, rel in planted_files:
        if rng.random() < 0.3 and "/" not in rel:
            rel = f"pkg/sub/{rel}"
        files[rel] = "guidance\n"
    for rel in decoys:
        files[rel] = "decoy\n"
    h = commit(repo.path, "Initial import", files=files, when=t)
    repo.commits[h] = None

    for k in range(rng.randrange(4, 14)):
        t += 3600
        who = rng.random()
        subject = f"Change {k}"
        trailers, author, agent = [], rng.choice(HUMANS), None
        if who < 0.3:
            agent, value = rng.choice(AGENT_COAUTHORS)
            key = _random_case(rng, "Co-authored-by")
            trailers.append(f"{key}: {_random_case(rng, value)}")
            if rng.random() < 0.4:
                trailers.insert(0, f"Signed-off-by: {author[0]} <{author[1]}>")
        elif who < 0.4:
            agent, author = rng.choice(AGENT_AUTHORS)
        elif who < 0.5:
            human = rng.choice(HUMANS)
            trailers.append(f"Co-authored-by: {human[0]} <{human[1]}>")
        decoy = agent is None and rng.random() < 0.3
        msg = _message(rng, subject, trailers, decoy)
        h = commit(repo.path, msg, files={f"src/file{k}.txt": f"{k}\n"}, when=t, author=author)
        repo.commits[h] = agent

    tracked = set(git(repo.path, "ls-files").stdout.split("\n"))
    for agent, rel in planted_files:
        for cand in (rel, f"pkg/sub/{rel}"):
            if cand in tracked:
                repo.files.add((agent, cand))
    return repo


def make_corpus(root: Path, n: int = 20, seed: int = 7) -> list[PlantedRepo]:
    rng = random.Random(seed)
    return [make_repo(root, i, rng) for i in range(n)]


# -- oracle -------------------------------------------------------------------

def _catalog_rules(catalog):
    return [(a.id, r) for a in catalog.agents for r in a.rules]


def _id_match(text: str, pattern: str, kind: str) -> bool:
    text, pattern = text.lower(), pattern.lower()
    if not text:
        return False
    if kind == "substring":
        return pattern in text
    return text == pattern or text == pattern + "[bot]"


def _split_identity(value: str) -> tuple[str, str]:
    m = re.fullmatch(r"\s*(.*?)\s*<([^>]*)>\s*", value)
    if m:
        return m.group(1), m.group(2)
    value = value.strip()
    return ("", value) if "@" in value and " " not in value else (value, "")


def oracle_commit_evidence(repo: Path, catalog) -> set[tuple[str, str, str, str]]:
    """(agent_id, category, pattern, commit hash) for every commit rule hit."""
    out = set()
    rules = [(aid, r) for aid, r in _catalog_rules(catalog)
             if r.category.value in ("commit_coauthor", "commit_author")]
    hashes = git(repo, "rev-list", "HEAD").stdout.split()
    for h in hashes:
        raw = git(repo, "cat-file", "commit", h).stdout
        header, _, message = raw.partition("\n\n")
        author_line = next(line for line in header.split("\n") if line.startswith("author "))
        a_name, a_email = re.match(r"author (.*) <(.*)> \d+ [+-]\d{4}", author_line).groups()
        parsed = subprocess.run(["git", "interpret-trailers", "--parse"], input=message,
                                capture_output=True, text=True, check=True).stdout
        idents = []
        for line in parsed.splitlines():
            key, _, value = line.partition(":")
            if key.strip().lower() in ("co-authored-by", "generated-by"):
                idents.append(_split_identity(value))
        for aid, r in rules:
            kind = r.pattern_kind.value
            if r.category.value == "commit_author":
                hit = _id_match(a_name, r.pattern, kind) or _id_match(a_email, r.pattern, kind)
            else:
                hit = any(_id_match(n, r.pattern, kind) or _id_match(e, r.pattern, kind) for n, e in idents)
            if hit:
                out.add((aid, r.category.value, r.pattern, h))
    return out


def _query_regex(query: str) -> re.Pattern:
    m = re.fullmatch(r"path:/(.*)/", query)
    return re.compile(m.group(1))


FILE_QUERIES = {(aid, pat): _query_regex(q) for aid, cat, _, pat, q, _ in CELLS if cat == "file_path"}


def oracle_file_evidence(repo: Path) -> set[tuple[str, str, str, str]]:
    files = [f for f in git(repo, "ls-files").stdout.split("\n") if f]
    dirs = {"/".join(f.split("/")[:k]) for f in files for k in range(1, f.count("/") + 1)}
    out = set()
    for (aid, pat), rx in FILE_QUERIES.items():
        for f in files:
            if rx.search(f):
                out.add((aid, "file_path", pat, f))
        for d in dirs:
            if rx.search(d + "/"):
                out.add((aid, "file_path", pat, d))
    return out


def oracle_ignored_rules(repo: Path, catalog, probes: dict[str, str]) -> set[str]:
    """rule_ids whose probe path ``git check-ignore`` reports as ignored."""
    out = set()
    for rid, probe in probes.items():
        if git(repo, "check-ignore", "-q", "--no-index", probe, check=False).returncode == 0:
            out.add(rid)
    return out
