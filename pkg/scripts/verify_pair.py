#!/usr/bin/env python3
"""Check one candidate file against a program's oracle, stage by stage."""

import argparse
import tempfile
from pathlib import Path

from vert.config import PipelineConfig
from vert.pipeline import build_candidate_harness
from vert.source import SourceProgram
from vert.verifier import STAGES, run_cascade


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("program", help="directory with source.* and entry.*")
    ap.add_argument("candidate", help="Rust file holding the candidate function")
    ap.add_argument("--stage-timeout", type=float, default=120.0)
    ap.add_argument("--unwind", type=int, default=10)
    ap.add_argument("--stages", default=",".join(STAGES), help="comma-separated subset of PBT,Bounded,Full")
    args = ap.parse_args()
    cfg = PipelineConfig(stage_time_limit=args.stage_timeout, default_unwind_bound=args.unwind)
    src = SourceProgram.from_dir(args.program)
    with tempfile.TemporaryDirectory() as ws:
        h = build_candidate_harness(src, Path(args.candidate).read_text(), ws, cfg)
        outcomes = run_cascade(h, cfg.verifier(), tuple(args.stages.split(",")))
    for o in outcomes:
        k = f" k={o.unwind_bound}" if o.unwind_bound else ""
        ce = f" counterexample={o.counterexample}" if o.counterexample is not None else ""
        print(f"{o.stage:<8} {o.status:<15} {o.duration:7.2f}s{k}{ce}")
    return 0 if outcomes and all(o.passed for o in outcomes) else 1


if __name__ == "__main__":
    raise SystemExit(main())
