"""``agentscan`` command line.

Exit codes: 0 success, 1 internal or validation error, 2 unreadable
repository, 3 platform authentication / rate-limit failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__, gitrepo
from .catalog import (
    Catalog,
    CatalogError,
    builtin_catalog,
    catalog_from_dict,
    dump_catalog,
    load_catalog,
    validate_catalog,
)
from .classify import build_report, exclusion_list, merge_rate, render_report
from .commitscan import scan_history
from .ghminer import (
    GitHubClient,
    NotSearchableError,
    PartialResultError,
    build_search_query,
    count_matches,
    fetch_issue_evidence,
    fetch_pr_evidence,
    token_from_env,
)
from .transport import ApiError, AuthError, RateLimitError, RecordedTransport
from .treescan import detect_reduced_observability, scan_tree

log = logging.getLogger("agentscan")

EXIT_OK, EXIT_ERROR, EXIT_REPO, EXIT_API = 0, 1, 2, 3


@dataclass
class CliConfig:
    catalog_path: str | None = None
    output_format: str = "text"
    output_path: str | None = None
    as_of_date: dt.date | None = None
    lax_commit_scan: bool = False
    jobs: int = 1

    @classmethod
    def from_args(cls, args) -> CliConfig:
        return cls(args.catalog, args.format, args.output, args.as_of or dt.date.today(),
                   args.lax, args.jobs)

    def catalog(self) -> Catalog:
        if self.catalog_path is None:
            return builtin_catalog()
        with open(self.catalog_path, "rb") as fh:
            return load_catalog(fh)

    @property
    def scanned_at(self) -> int:
        d = self.as_of_date or dt.date.today()
        return int(dt.datetime(d.year, d.month, d.day, tzinfo=dt.timezone.utc).timestamp())


class RepoUnreadable(Exception):
    pass


def _write(cfg: CliConfig, payload: bytes) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()


def _date_arg(value: str) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a YYYY-MM-DD date: {value!r}") from None


def _client(args) -> GitHubClient:
    transport = RecordedTransport(args.replay) if getattr(args, "replay", None) else None
    return GitHubClient(transport, token=token_from_env())


# -- local scanning -----------------------------------------------------------

def _local_scan(repo_path: str, cfg: CliConfig, catalog: Catalog, *, all_revisions=False, nested_ignores=False):
    try:
        gitrepo.check_repository(repo_path)
        commits = list(gitrepo.iter_commits(repo_path))
    except gitrepo.RepositoryError as e:
        raise RepoUnreadable(str(e)) from e
    summary = scan_history(commits, catalog, lax=cfg.lax_commit_scan, jobs=cfg.jobs)

    if all_revisions:
        file_ev = _first_introductions(repo_path, commits, catalog, cfg.as_of_date)
    else:
        file_ev = scan_tree(gitrepo.list_tree(repo_path), catalog, cfg.as_of_date)

    flags = None
    for directory, text in sorted(gitrepo.ignore_files(repo_path, nested=nested_ignores).items()):
        f = detect_reduced_observability(text.splitlines(), catalog, at_date=cfg.as_of_date)
        if flags is None:
            flags = f
        else:
            flags.ignored_agent_files.extend(f.ignored_agent_files)
    return summary, file_ev, flags


def _first_introductions(repo_path, commits, catalog, at_date):
    """Tree evidence over every revision, keeping each (rule, path) once."""
    seen = {}
    for c in sorted(commits, key=lambda c: (c.timestamp, c.hash)):
        for ev in scan_tree(gitrepo.list_tree(repo_path, c.hash), catalog, at_date,
                            observed_at=c.timestamp or None):
            seen.setdefault((ev.rule_id, ev.locator), ev)
    return [seen[k] for k in sorted(seen)]


def _repo_id(repo_path: str) -> str:
    return Path(repo_path).resolve().name


# -- commands -----------------------------------------------------------------

def cmd_scan(args) -> int:
    cfg = CliConfig.from_args(args)
    catalog = cfg.catalog()
    summary, file_ev, flags = _local_scan(args.repo, cfg, catalog, all_revisions=args.all_revisions,
                                          nested_ignores=args.nested_ignores)
    report = build_report(_repo_id(args.repo), summary=summary, file_evidence=file_ev, flags=flags,
                          catalog_version=catalog.version, scanned_at=cfg.scanned_at)
    _write(cfg, render_report(report, cfg.output_format))
    return EXIT_OK


def cmd_mine(args) -> int:
    cfg = CliConfig.from_args(args)
    catalog = cfg.catalog()
    client = _client(args)
    prs, pr_ev = fetch_pr_evidence(args.slug, catalog, client)
    issue_ev = fetch_issue_evidence(args.slug, catalog, client)
    summary = file_ev = flags = None
    if args.local:
        summary, file_ev, flags = _local_scan(args.local, cfg, catalog)
    report = build_report(args.slug, summary=summary, file_evidence=file_ev or (), pr_evidence=pr_ev,
                          issue_evidence=issue_ev, flags=flags, catalog_version=catalog.version,
                          scanned_at=cfg.scanned_at)
    payload = render_report(report, cfg.output_format)
    if cfg.output_format == "text":
        agent_prs = [p for p in prs if str(p.number) in {e.locator for e in pr_ev}]
        for label, subset in (("all PRs", prs), ("agent PRs", agent_prs)):
            inc, exc = merge_rate(subset, False), merge_rate(subset, True)
            payload += (f"merge rate ({label}): {_fmt_rate(inc)} incl. drafts, "
                        f"{_fmt_rate(exc)} excl. drafts\n").encode()
    _write(cfg, payload)
    return EXIT_OK


def _fmt_rate(rate: float | None) -> str:
    return "n/a" if rate is None else f"{rate:.4f}"


def cmd_counts(args) -> int:
    cfg = CliConfig.from_args(args)
    catalog = cfg.catalog()
    if args.all:
        rules = [r for _, r in catalog.iter_rules()]
    elif args.rule_ids:
        try:
            rules = [catalog.rule(rid) for rid in args.rule_ids]
        except KeyError as e:
            log.error("unknown rule id %s", e.args[0])
            return EXIT_ERROR
    else:
        log.error("give rule ids or --all")
        return EXIT_ERROR
    client = _client(args)
    fetched_at = dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    rows = []
    for rule in rules:
        try:
            query = build_search_query(rule)
        except NotSearchableError:
            log.info("skipping %s: not searchable", rule.rule_id)
            continue
        rows.append((rule.rule_id, query.query_string, count_matches(query, client).value))
    if cfg.output_format == "json":
        doc = {"approximate": True, "fetched_at": fetched_at,
               "counts": [{"rule_id": r, "query": q, "approximate_count": n} for r, q, n in rows]}
        payload = json.dumps(doc, indent=2) + "\n"
    elif cfg.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rule_id", "query", "approximate_count", "fetched_at"])
        w.writerows([r, q, n, fetched_at] for r, q, n in rows)
        payload = buf.getvalue()
    else:
        lines = [f"# approximate counts, fetched {fetched_at}", "rule_id\tquery\tapproximate_count"]
        lines += [f"{r}\t{q}\t~{n}" for r, q, n in rows]
        payload = "\n".join(lines) + "\n"
    _write(cfg, payload.encode())
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = CliConfig.from_args(args)
    catalog = cfg.catalog()
    evidence = []
    if args.emit in ("commits", "both"):
        summary, _, _ = _local_scan(args.repo, cfg, catalog)
        evidence.extend(summary.evidence)
    elif not Path(args.repo).is_dir():
        raise RepoUnreadable(f"{args.repo}: no such directory")
    if args.emit in ("prs", "both") and args.github:
        _, pr_ev = fetch_pr_evidence(args.github, catalog, _client(args))
        evidence.extend(pr_ev)
    excl = exclusion_list(args.github or _repo_id(args.repo), evidence,
                          catalog_version=catalog.version, scanned_at=cfg.scanned_at)
    payload = excl.to_json(args.emit) if cfg.output_format == "json" else excl.to_lines(args.emit)
    _write(cfg, payload)
    return EXIT_OK


def cmd_catalog(args) -> int:
    cfg = CliConfig.from_args(args)
    if args.action == "validate":
        if cfg.catalog_path is None:
            catalog = builtin_catalog()
        else:
            try:
                catalog = catalog_from_dict(json.loads(Path(cfg.catalog_path).read_bytes()))
            except json.JSONDecodeError as e:
                print(f"error: <catalog>: {e.msg} (line {e.lineno}, column {e.colno})", file=sys.stderr)
                return EXIT_ERROR
        diags = validate_catalog(catalog)
        for d in diags:
            print(str(d), file=sys.stderr)
        return EXIT_ERROR if any(d.severity == "error" for d in diags) else EXIT_OK
    catalog = cfg.catalog()
    if args.action == "list":
        lines = []
        for a in catalog.agents:
            tag = " (generic)" if a.generic else ""
            lines.append(f"{a.id}\t{a.display_name}{tag}\t{len(a.rules)} rules")
        _write(cfg, ("\n".join(lines) + "\n").encode())
    else:
        _write(cfg, dump_catalog(catalog))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--catalog", metavar="PATH", help="catalog JSON file (default: builtin)")
    common.add_argument("--format", choices=["json", "csv", "text"], default="text")
    common.add_argument("--output", metavar="PATH", help="write payload here instead of stdout")
    common.add_argument("--as-of", type=_date_arg, metavar="YYYY-MM-DD",
                        help="select rules valid on this date (default: today)")
    common.add_argument("--lax", action="store_true",
                        help="also match co-authored-by lines outside the trailer block")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel commit matching")
    common.add_argument("-v", "--verbose", action="store_true")

    api = argparse.ArgumentParser(add_help=False)
    api.add_argument("--replay", metavar="DIR", help="serve API calls from recorded response files")

    p = argparse.ArgumentParser(prog="agentscan", description="Detect coding-agent activity in repositories.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", parents=[common], help="scan a local git repository")
    s.add_argument("repo")
    s.add_argument("--all-revisions", action="store_true", help="scan every revision's tree")
    s.add_argument("--nested-ignores", action="store_true", help="also read nested .gitignore files")
    s.set_defaults(func=cmd_scan)

    m = sub.add_parser("mine", parents=[common, api], help="mine PRs and issues of a GitHub repository")
    m.add_argument("slug", metavar="OWNER/NAME")
    m.add_argument("--local", metavar="PATH", help="also scan a local clone")
    m.set_defaults(func=cmd_mine)

    c = sub.add_parser("counts", parents=[common, api], help="approximate platform match counts per rule")
    c.add_argument("rule_ids", nargs="*")
    c.add_argument("--all", action="store_true")
    c.set_defaults(func=cmd_counts)

    f = sub.add_parser("filter", parents=[common, api], help="emit an exclusion list")
    f.add_argument("repo")
    f.add_argument("--emit", choices=["commits", "prs", "both"], default="commits")
    f.add_argument("--github", metavar="OWNER/NAME", help="repository slug for PR evidence")
    f.set_defaults(func=cmd_filter)

    k = sub.add_parser("catalog", parents=[common], help="validate, list or export the catalog")
    k.add_argument("action", choices=["validate", "list", "export"])
    k.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="agentscan: %(message)s")
    try:
        return args.func(args)
    except RepoUnreadable as e:
        print(f"agentscan: cannot read repository: {e}", file=sys.stderr)
        return EXIT_REPO
    except (RateLimitError, AuthError, PartialResultError) as e:
        err = {"error": type(e).__name__, "message": str(e), "status": e.status}
        if isinstance(e, RateLimitError):
            err["reset_at"] = e.reset_at
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return EXIT_API
    except (CatalogError, OSError, ApiError) as e:
        print(f"agentscan: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:  # pragma: no cover - last resort
        log.exception("internal error: %s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
