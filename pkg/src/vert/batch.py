"""Batch runs over a benchmark tree, aggregated into pass-count and timing tables."""

from __future__ import annotations

import copy
import json
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import PipelineConfig
from .pipeline import COMPONENTS, PipelineReport, status_rank, transpile
from .source import SourceProgram

COUNT_COLUMNS = ("total", "compiled", "pbt_pass", "bounded_pass", "full_pass")
COLUMN_TITLES = ("Total", "Compiled", "PBT", "Bounded-ver.", "Full-ver.")


@dataclass
class ProgramResult:
    program_id: str
    language: str
    status: str
    compiled: bool
    timings: dict[str, float]
    error: str = ""
    report: PipelineReport | None = None

    def counts(self) -> dict[str, int]:
        rank = status_rank(self.status)
        return {"total": 1, "compiled": int(self.compiled), "pbt_pass": int(rank >= 1),
                "bounded_pass": int(rank >= 2), "full_pass": int(rank >= 3)}


@dataclass
class BatchReport:
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    mean_durations: dict[str, float] = field(default_factory=dict)
    programs: list[ProgramResult] = field(default_factory=list)

    @classmethod
    def aggregate(cls, results: list[ProgramResult]) -> "BatchReport":
        results = sorted(results, key=lambda r: r.program_id)
        counts: dict[str, dict[str, int]] = {}
        for r in results:
            row = counts.setdefault(r.language, dict.fromkeys(COUNT_COLUMNS, 0))
            for k, v in r.counts().items():
                row[k] += v
        n = len(results)
        means = {c: (sum(r.timings.get(c, 0.0) for r in results) / n if n else 0.0) for c in COMPONENTS}
        return cls(counts, means, results)

    def totals(self) -> dict[str, int]:
        out = dict.fromkeys(COUNT_COLUMNS, 0)
        for row in self.counts.values():
            for k in COUNT_COLUMNS:
                out[k] += row[k]
        return out

    def chain_holds(self) -> bool:
        rows = list(self.counts.values()) + [self.totals()]
        return all(r["full_pass"] <= r["bounded_pass"] <= r["pbt_pass"] <= r["compiled"] <= r["total"]
                   for r in rows)

    def to_json(self, timings: bool = True) -> dict:
        d = {
            "counts": self.counts,
            "totals": self.totals(),
            "programs": [{"program_id": r.program_id, "language": r.language, "status": r.status,
                          "compiled": r.compiled, "error": r.error} for r in self.programs],
        }
        if timings:
            d["mean_durations"] = {k: round(v, 3) for k, v in self.mean_durations.items()}
        return d

    def render_table(self) -> str:
        header = ["Language", *COLUMN_TITLES]
        rows = [[lang, *(str(c[k]) for k in COUNT_COLUMNS)] for lang, c in sorted(self.counts.items())]
        rows.append(["All", *(str(v) for v in self.totals().values())])
        widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
        fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
        lines = [fmt(header), fmt(["-" * w for w in widths]), *map(fmt, rows), "",
                 "Component   Mean time (s)"]
        for k in COMPONENTS:
            lines.append(f"{k:<10}  {self.mean_durations.get(k, 0.0):13.2f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        j, t = out / "batch.report.json", out / "batch.report.txt"
        j.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        t.write_text(self.render_table())
        return j, t


def discover(bench_dir: str | Path) -> list[Path]:
    root = Path(bench_dir)
    return sorted(p for p in root.iterdir()
                  if p.is_dir() and any(p.glob("source.*")) and any(p.glob("entry.*")))


def run_program(path: Path, cfg: PipelineConfig, out_dir: Path | None = None) -> ProgramResult:
    try:
        source = SourceProgram.from_dir(path)
    except Exception as e:  # malformed program directory
        return ProgramResult(path.name, "unknown", "Failed", False, {}, f"{type(e).__name__}: {e}")
    try:
        report = transpile(source, cfg)
    except Exception as e:
        # a broken program is a failed row, never a failed batch
        return ProgramResult(source.program_id, source.language, "Failed", False, {},
                             f"{type(e).__name__}: {e}" if str(e) else traceback.format_exc(limit=1))
    if out_dir is not None:
        report.write(out_dir)
    return ProgramResult(source.program_id, source.language, report.status,
                         any(a.compiled for a in report.attempts), report.timings, report=report)


def run_batch(bench_dir: str | Path, cfg: PipelineConfig, jobs: int = 1,
              out_dir: str | Path | None = None) -> BatchReport:
    programs = discover(bench_dir)
    out = Path(out_dir) if out_dir else None

    def one(p: Path) -> ProgramResult:
        # each instance gets its own config copy; workspaces are per program id
        return run_program(p, copy.deepcopy(cfg), out)
    if jobs <= 1:
        results = [one(p) for p in programs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, programs))
    report = BatchReport.aggregate(results)
    if out is not None:
        report.write(out)
    return report
