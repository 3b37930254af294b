"""Adapter between a local git repository and the scanners.

This is the only module that touches a repository on disk; it shells out to
``git`` and parses its machine-readable output.
"""
from __future__ import annotations

import os
import subprocess
from pathlib import Path
from typing import Iterator

from .commitscan import CommitRecord, Identity
from .treescan import EntryKind, TreeEntry

_FIELD = "\x1f"
_RECORD = "\x1e"
_LOG_FORMAT = _FIELD.join(["%H", "%an", "%ae", "%cn", "%ce", "%ct", "%P", "%B"]) + _RECORD


class RepositoryError(Exception):
    """The path is not a readable git repository (or git failed)."""


def _git(repo: str | os.PathLike, *args: str) -> bytes:
    try:
        proc = subprocess.run(["git", "-C", str(repo), *args], capture_output=True, check=False)
    except FileNotFoundError as e:
        raise RepositoryError("git executable not found") from e
    if proc.returncode != 0:
        raise RepositoryError(proc.stderr.decode("utf-8", "replace").strip() or f"git {args[0]} failed")
    return proc.stdout


def check_repository(repo: str | os.PathLike) -> Path:
    path = Path(repo)
    if not path.is_dir():
        raise RepositoryError(f"{repo}: no such directory")
    _git(path, "rev-parse", "--git-dir")
    return path


def has_commits(repo) -> bool:
    try:
        _git(repo, "rev-parse", "--verify", "-q", "HEAD")
        return True
    except RepositoryError:
        return False


def iter_commits(repo, rev: str = "HEAD", *, reverse: bool = False) -> Iterator[CommitRecord]:
    """Every commit reachable from ``rev``, each exactly once."""
    if not has_commits(repo):
        return
    args = ["log", f"--format={_LOG_FORMAT}"]
    if reverse:
        args.append("--reverse")
    out = _git(repo, *args, rev, "--").decode("utf-8", "replace")
    for rec in out.split(_RECORD):
        rec = rec.lstrip("\n")
        if not rec:
            continue
        h, an, ae, cn, ce, ct, parents, body = rec.split(_FIELD, 7)
        yield CommitRecord(
            hash=h,
            author=Identity(an, ae),
            committer=Identity(cn, ce),
            timestamp=int(ct) if ct else 0,
            message=body,
            parents=tuple(parents.split()),
        )


def list_tree(repo, rev: str = "HEAD") -> list[TreeEntry]:
    """Files and directories of one revision (``git ls-tree -r -t -z``)."""
    if not has_commits(repo):
        return []
    out = _git(repo, "ls-tree", "-r", "-t", "-z", "--full-tree", rev)
    entries = []
    for rec in out.split(b"\0"):
        if not rec:
            continue
        meta, path = rec.split(b"\t", 1)
        kind = EntryKind.DIRECTORY if meta.split()[1] == b"tree" else EntryKind.FILE
        entries.append(TreeEntry(path.decode("utf-8", "replace"), kind))
    return entries


def read_blob(repo, rev: str, path: str) -> str | None:
    try:
        return _git(repo, "show", f"{rev}:{path}").decode("utf-8", "replace")
    except RepositoryError:
        return None


def ignore_files(repo, rev: str = "HEAD", *, nested: bool = False) -> dict[str, str]:
    """Contents of ``.gitignore`` files keyed by their directory ("" = root)."""
    out = {}
    root = read_blob(repo, rev, ".gitignore") if has_commits(repo) else None
    if root is None:
        p = Path(repo) / ".gitignore"
        root = p.read_text(encoding="utf-8", errors="replace") if p.is_file() else None
    if root is not None:
        out[""] = root
    if nested:
        for e in list_tree(repo, rev):
            if e.kind is EntryKind.FILE and e.path.endswith("/.gitignore"):
                text = read_blob(repo, rev, e.path)
                if text is not None:
                    out[e.path.rsplit("/", 1)[0]] = text
    return out
