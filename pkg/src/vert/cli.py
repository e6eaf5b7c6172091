"""Command-line front end: ``vert run`` for one program, ``vert batch`` for a tree."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .batch import run_batch
from .config import load_config
from .errors import VertError
from .pipeline import STATUSES, status_rank, transpile
from .source import SourceProgram, guess_target

EXTENSIONS = {".c": "C", ".cpp": "CPP", ".cc": "CPP", ".go": "Go"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file (flags override it)")
    p.add_argument("--language", choices=["C", "CPP", "Go"])
    p.add_argument("--backend", choices=["scripted", "remote"])
    p.add_argument("--fixtures", help="scripted backend directory: <program-id>/attempt-<n>.rs")
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--stage-timeout", type=float, help="seconds per verification stage")
    p.add_argument("--unwind", type=int, help="initial unwind bound k")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="vert-reports", help="report directory")
    p.add_argument("--workspace", help="scratch directory for builds")
    p.add_argument("--success", choices=STATUSES[1:], help="lowest status that exits 0")
    p.add_argument("--no-full", action="store_true", help="stop the cascade after bounded verification")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any config key")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vert", description="verified transpilation to safe Rust")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="transpile one program")
    r.add_argument("program", nargs="?", help="directory with source.* and entry.*")
    r.add_argument("--source", help="source file")
    r.add_argument("--entry", help="entry-call file")
    r.add_argument("--target", help="target function name (default: guessed from the entry call)")
    r.add_argument("--id", help="program id (default: directory or file stem)")
    _common(r)
    b = sub.add_parser("batch", help="transpile every program under a directory")
    b.add_argument("bench_dir")
    b.add_argument("--jobs", type=int, default=1)
    _common(b)
    return ap


def _overrides(args) -> dict[str, str]:
    o: dict[str, str] = {}
    for key, flag in (("max_attempts", "max_attempts"), ("stage_time_limit", "stage_timeout"),
                      ("default_unwind_bound", "unwind"), ("seed", "seed"), ("success", "success"),
                      ("workspace_dir", "workspace"), ("backend.kind", "backend"), ("backend.fixtures", "fixtures")):
        v = getattr(args, flag, None)
        if v is not None:
            o[key] = str(v)
    if args.no_full:
        o["run_full"] = "false"
    for item in args.set:
        k, sep, v = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        o[k.strip()] = v
    return o


def _load_source(args, ap: argparse.ArgumentParser) -> SourceProgram:
    if args.program:
        d = Path(args.program)
        if not d.is_dir():
            ap.error(f"{d}: not a directory")
        if not any(d.glob("source.*")):
            ap.error(f"{d}: missing source file")
        if not any(d.glob("entry.*")):
            ap.error(f"{d}: missing entry-call file")
        src = SourceProgram.from_dir(d, args.language)
        if args.target:
            src = SourceProgram(src.language, src.text, src.entry_call, args.target, args.id or src.program_id)
        elif args.id:
            src.program_id = args.id
        return src
    if not args.source or not args.entry:
        ap.error("give a program directory, or both --source and --entry")
    s, e = Path(args.source), Path(args.entry)
    for p, what in ((s, "source"), (e, "entry-call")):
        if not p.is_file():
            ap.error(f"{p}: missing {what} file")
    lang = args.language or EXTENSIONS.get(s.suffix, "C")
    text, entry = s.read_text(), e.read_text()
    target = args.target or guess_target(text, entry, lang)
    return SourceProgram(lang, text, entry, target, args.id or s.stem)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
    except (ValueError, OSError) as e:
        ap.error(str(e))
    if args.command == "run":
        src = _load_source(args, ap)
        try:
            report = transpile(src, cfg)
        except VertError as e:
            print(f"vert: {type(e).__name__}: {e}", file=sys.stderr)
            return 3
        report.write(args.out)
        sys.stdout.write(report.render_text())
        return 0 if status_rank(report.status) >= status_rank(cfg.success) else 1
    bench = Path(args.bench_dir)
    if not bench.is_dir():
        ap.error(f"{bench}: not a directory")
    report = run_batch(bench, cfg, args.jobs, args.out)
    sys.stdout.write(report.render_table())
    return 0


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
