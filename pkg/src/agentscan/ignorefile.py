"""A subset of gitignore pattern semantics.

Supported: comments, blank lines, ``!`` negation, trailing ``/``
(directory-only), ``*``, ``?``, ``**`` in leading, trailing and middle
positions, root anchoring for patterns containing a ``/``, backslash escapes
and last-match-wins ordering. Bracket expressions are not supported: they
are matched literally and reported in ``IgnoreRuleSet.diagnostics``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field


@dataclass(frozen=True)
class IgnorePattern:
    line: str  # the original line, as written
    negated: bool
    dir_only: bool
    anchored: bool
    regex: re.Pattern

    def matches(self, path: str, is_dir: bool) -> bool:
        if self.dir_only and not is_dir:
            return False
        target = path if self.anchored else path.rsplit("/", 1)[-1]
        return self.regex.fullmatch(target) is not None


@dataclass
class IgnoreRuleSet:
    patterns: list[IgnorePattern] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def match(self, path: str, is_dir: bool) -> IgnorePattern | None:
        """Last pattern matching ``path`` itself (ancestors not considered)."""
        for p in reversed(self.patterns):
            if p.matches(path, is_dir):
                return p
        return None


def _glob_to_regex(glob: str, lineno: int, diagnostics: list[str]) -> str:
    out = []
    i, n = 0, len(glob)
    while i < n:
        c = glob[i]
        if c == "\\" and i + 1 < n:
            out.append(re.escape(glob[i + 1]))
            i += 2
            continue
        if c == "*":
            j = i
            while j < n and glob[j] == "*":
                j += 1
            stars = j - i
            at_start = i == 0 or glob[i - 1] == "/"
            at_end = j == n or glob[j] == "/"
            if stars >= 2 and at_start and at_end:
                if j == n:
                    # trailing "/**" (or a lone "**"): everything below
                    out.append(".*")
                else:
                    # "**/" : zero or more leading directories
                    out.append("(?:.*/)?")
                    j += 1
            else:
                out.append("[^/]*")
            i = j
            continue
        if c == "?":
            out.append("[^/]")
        elif c == "[":
            diagnostics.append(f"line {lineno}: bracket expression treated literally")
            out.append(re.escape(c))
        else:
            out.append(re.escape(c))
        i += 1
    return "".join(out)


def _strip_trailing_spaces(line: str) -> str:
    # unescaped trailing spaces are dropped; "\ " keeps one space
    end = len(line)
    while end > 0 and line[end - 1] == " ":
        if end >= 2 and line[end - 2] == "\\":
            break
        end -= 1
    return line[:end]


def parse_ignore_file(lines) -> IgnoreRuleSet:
    if isinstance(lines, str):
        lines = lines.splitlines()
    rs = IgnoreRuleSet()
    for lineno, raw in enumerate(lines, 1):
        line = _strip_trailing_spaces(raw.rstrip("\r\n"))
        if not line or line.startswith("#"):
            continue
        negated = False
        if line.startswith("!"):
            negated = True
            line = line[1:]
        elif line.startswith("\\!") or line.startswith("\\#"):
            line = line[1:]
        dir_only = False
        if line.endswith("/") and not line.endswith("\\/"):
            dir_only = True
            line = line.rstrip("/")
        if not line:
            continue
        anchored = "/" in line
        if line.startswith("/"):
            line = line[1:]
        regex = re.compile(_glob_to_regex(line, lineno, rs.diagnostics), re.DOTALL)
        rs.patterns.append(IgnorePattern(raw, negated, dir_only, anchored, regex))
    return rs


def is_ignored(ruleset: IgnoreRuleSet, path: str, is_dir: bool = False) -> bool:
    """Whether ``path`` (repository-relative, ``/``-separated) is ignored.

    A path inside an ignored directory stays ignored even if a later
    negation matches the path itself: git never descends into excluded
    directories.
    """
    path = path.strip("/")
    parts = path.split("/")
    for k in range(1, len(parts)):
        p = ruleset.match("/".join(parts[:k]), True)
        if p is not None and not p.negated:
            return True
    p = ruleset.match(path, is_dir)
    return p is not None and not p.negated
