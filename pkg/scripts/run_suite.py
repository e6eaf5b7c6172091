#!/usr/bin/env python3
"""Run the bundled six-program suite with the scripted backend and print the table."""

import argparse
import shutil
import tempfile
from pathlib import Path

from vert.batch import run_batch
from vert.config import BackendConfig, PipelineConfig

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bench", default=str(FIXTURES / "suite"))
    ap.add_argument("--candidates", default=str(FIXTURES / "candidates"))
    ap.add_argument("--stage-timeout", type=float, default=30.0)
    ap.add_argument("--unwind", type=int, default=4)
    ap.add_argument("--jobs", type=int, default=3)
    ap.add_argument("--out", default="suite-reports")
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as ws:
        cfg = PipelineConfig(stage_time_limit=args.stage_timeout, default_unwind_bound=args.unwind,
                             workspace_dir=ws, backend=BackendConfig(fixtures=args.candidates))
        report = run_batch(args.bench, cfg, args.jobs, args.out)
    print(report.render_table())
    for r in report.programs:
        print(f"{r.program_id:<16} {r.status}{'  ' + r.error if r.error else ''}")
    return 0 if report.chain_holds() else 1


if __name__ == "__main__":
    raise SystemExit(main())
