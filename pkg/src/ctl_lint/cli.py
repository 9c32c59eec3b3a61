"""Command-line interface and report rendering.

Exit codes: 0 when no diagnostics were rendered, 1 when at least one was,
2 on usage, parse, spec or I/O errors.  Severity and check-id filters are
applied at render time only; the analysis itself always runs the whole
active check set so cache entries stay filter-independent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources

from .cfg import build_cfg, to_dot
from .diagnostics import Diagnostic, diagnostic_to_json_obj, meets_min_severity
from .engine import (
    AnalysisError, CacheDb, Counters, EngineConfig, analyze_unit,
)
from .frontend import ParseError, parse_bytes
from .intervals import BUFFER_OVERRUN, DIV_BY_ZERO
from .speclang import CheckSpec, SpecError, parse_checks

DEFAULT_DB = ".ctl-lint.db"
DB_ENV_VAR = "CTL_LINT_DB"

_USAGE = """\
usage: ctl-lint analyze [options] FILE...
       ctl-lint --list-checks [--specs FILE.chk]...

options:
  --checks a,b,c        render only these check ids
  --format text|json    report format (default text)
  --db PATH             cache database path (default .ctl-lint.db,
                        overridable via CTL_LINT_DB)
  --no-cache            do not read or write the cache database
  --max-witnesses N     counterexamples examined per diagnostic (default 5)
  --min-severity S      error|warning|info rendering threshold (default info)
  --jobs N              parallel workers (default: available parallelism)
  --dump-cfg            print each function's CFG as DOT and exit
  --specs FILE.chk      extra check specifications (repeatable)
"""


def render_text(ds: list[Diagnostic]) -> str:
    """Compiler-style lines, one per diagnostic, plus indented traces."""
    lines = []
    for d in ds:
        lines.append(f"{d.loc.file}:{d.loc.line}:{d.loc.column}: {d.severity} "
                     f"[{d.check_id}] {d.message} ({d.confidence})")
        if d.trace:
            lines.append("  trace: " + " -> ".join(f"{t.line}:{t.column}" for t in d.trace))
    return "\n".join(lines) + ("\n" if lines else "")


def render_json(ds: list[Diagnostic], counters: Counters) -> str:
    """Canonical JSON report; byte-identical for identical sources and
    config regardless of cache state or worker count."""
    obj = {
        "version": "1",
        "diagnostics": [diagnostic_to_json_obj(d) for d in ds],
        "summary": {
            "error": sum(1 for d in ds if d.severity == "error"),
            "warning": sum(1 for d in ds if d.severity == "warning"),
            "info": sum(1 for d in ds if d.severity == "info"),
            "tasks": counters.content_tasks,
            # content view: what a fresh run reports; live hit-rate is in
            # the stderr summary
            "cache_hits": 0,
        },
    }
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def render_summary(ds: list[Diagnostic], counters: Counters) -> str:
    errors = sum(1 for d in ds if d.severity == "error")
    warnings = sum(1 for d in ds if d.severity == "warning")
    infos = sum(1 for d in ds if d.severity == "info")
    lines = [f"{errors} errors, {warnings} warnings, {infos} infos"]
    by_check: dict[str, int] = {}
    for d in ds:
        by_check[d.check_id] = by_check.get(d.check_id, 0) + 1
    for check_id in sorted(by_check):
        lines.append(f"  {check_id}: {by_check[check_id]}")
    lines.append(f"functions analyzed: {counters.functions}")
    lines.append(f"tasks: {counters.content_tasks} created, "
                 f"{counters.content_skipped} skipped by trigger filter")
    looked_up = counters.cache_hits + counters.cache_misses
    if looked_up:
        pct = 100 * counters.cache_hits // looked_up
        lines.append(f"cache hits: {pct}% ({counters.cache_hits}/{looked_up})")
    else:
        lines.append("cache: disabled")
    return "\n".join(lines) + "\n"


def _load_checkset(spec_paths: list[str]) -> tuple[list[CheckSpec], str]:
    builtin_text = resources.files("ctl_lint").joinpath("builtin.chk").read_text("utf-8")
    texts = [builtin_text]
    checks = parse_checks(builtin_text, "builtin.chk")
    for path in spec_paths:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        texts.append(text)
        checks.extend(parse_checks(text, path))
    ids = [c.id for c in checks]
    for c in checks:
        if ids.count(c.id) > 1:
            raise SpecError(c.loc, f"duplicate check id '{c.id}' across spec files")
    return checks, "\n\x00\n".join(texts)


def _known_check_ids(checks: list[CheckSpec]) -> set[str]:
    return {c.id for c in checks} | {BUFFER_OVERRUN, DIV_BY_ZERO}


@dataclass
class RunConfig:
    inputs: list[str]
    check_ids: set[str] | None
    format: str
    db_path: str | None  # None = caching disabled
    max_witnesses: int
    min_severity: str
    jobs: int
    dump_cfg: bool
    spec_paths: list[str]


def _parse_analyze_args(args: list[str]) -> RunConfig:
    p = argparse.ArgumentParser(prog="ctl-lint analyze", add_help=False)
    p.add_argument("files", nargs="+")
    p.add_argument("--checks", default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--db", default=None)
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--max-witnesses", type=int, default=5)
    p.add_argument("--min-severity", choices=("error", "warning", "info"), default="info")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--dump-cfg", action="store_true")
    p.add_argument("--specs", action="append", default=[])
    ns = p.parse_args(args)
    if ns.max_witnesses < 0:
        raise UsageError("--max-witnesses must be >= 0")
    jobs = ns.jobs if ns.jobs is not None else (os.cpu_count() or 1)
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    db_path = None
    if not ns.no_cache:
        db_path = ns.db or os.environ.get(DB_ENV_VAR) or DEFAULT_DB
    check_ids = None
    if ns.checks is not None:
        check_ids = {c.strip() for c in ns.checks.split(",") if c.strip()}
        if not check_ids:
            raise UsageError("--checks needs at least one check id")
    return RunConfig(ns.files, check_ids, ns.format, db_path, ns.max_witnesses,
                     ns.min_severity, jobs, ns.dump_cfg, ns.specs)


class UsageError(Exception):
    pass


def _cmd_list_checks(spec_paths: list[str]) -> int:
    checks, _ = _load_checkset(spec_paths)
    for c in checks:
        refine = "refine" if c.refine else "no-refine"
        print(f"{c.id:<16} {c.severity:<8} forall {c.metavar}: {c.var_class:<8} {refine}")
    print(f"{BUFFER_OVERRUN:<16} {'error':<8} interval check (warning when only possible)")
    print(f"{DIV_BY_ZERO:<16} {'error':<8} interval check (warning when only possible)")
    return 0


def _cmd_analyze(cfg: RunConfig) -> int:
    checks, checkset_text = _load_checkset(cfg.spec_paths)
    if cfg.check_ids is not None:
        unknown = cfg.check_ids - _known_check_ids(checks)
        if unknown:
            raise UsageError(f"unknown check ids: {', '.join(sorted(unknown))}")

    units = []
    for path in cfg.inputs:
        with open(path, "rb") as fh:
            data = fh.read()
        units.append(parse_bytes(data, path))

    if cfg.dump_cfg:
        for tu in units:
            for f in tu.functions:
                sys.stdout.write(to_dot(build_cfg(f)))
        return 0

    db = CacheDb(cfg.db_path) if cfg.db_path is not None else None
    config = EngineConfig(checkset_text=checkset_text,
                          max_witnesses=cfg.max_witnesses, jobs=cfg.jobs)
    counters = Counters()
    diagnostics: list[Diagnostic] = []
    for tu in units:
        diagnostics.extend(analyze_unit(tu, checks, db, config, counters))
    diagnostics.sort(key=Diagnostic.sort_key)

    rendered = [d for d in diagnostics
                if meets_min_severity(d.severity, cfg.min_severity)
                and (cfg.check_ids is None or d.check_id in cfg.check_ids)]

    if cfg.format == "json":
        sys.stdout.write(render_json(rendered, counters) + "\n")
    else:
        sys.stdout.write(render_text(rendered))
        sys.stderr.write(render_summary(rendered, counters))
    return 1 if rendered else 0


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        if "--list-checks" in args:
            rest = [a for a in args if a not in ("--list-checks", "analyze")]
            p = argparse.ArgumentParser(prog="ctl-lint", add_help=False)
            p.add_argument("--specs", action="append", default=[])
            ns, leftover = p.parse_known_args(rest)
            if leftover:
                raise UsageError(f"unexpected arguments: {' '.join(leftover)}")
            return _cmd_list_checks(ns.specs)
        if not args or args[0] in ("-h", "--help"):
            sys.stdout.write(_USAGE)
            return 0 if args else 2
        if args[0] != "analyze":
            raise UsageError(f"unknown command {args[0]!r}; expected 'analyze'")
        return _cmd_analyze(_parse_analyze_args(args[1:]))
    except UsageError as exc:
        sys.stderr.write(f"ctl-lint: error: {exc}\n{_USAGE}")
        return 2
    except (ParseError, SpecError, AnalysisError) as exc:
        sys.stderr.write(f"ctl-lint: error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"ctl-lint: error: {exc}\n")
        return 2
    except SystemExit as exc:  # argparse error paths
        code = exc.code
        if isinstance(code, int):
            return 2 if code != 0 else 0
        sys.stderr.write(f"ctl-lint: error: {code}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
