"""The transpile loop: generate, repair, verify, feed counterexamples back."""

from __future__ import annotations

import json
import shutil
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .cleaning import clean_source
from .config import PipelineConfig
from .diagnostics import CompileResult, repair_loop
from .errors import FixtureExhausted, UnsupportedType, VertError
from .generator import Backend, generate_candidate, make_backend, render_prompt
from .harness import (Harness, derive_input_strategy, generate_equivalence_harness, generate_wrapper, parse_rust_signature,
                      parse_type_decls, write_harness)
from .oracle import build_oracle, identify_injection_points
from .source import SourceProgram
from .toolchain import run, which
from .verifier import PASS, TIMEOUT, VerificationOutcome, run_cascade

STATUSES = ("Failed", "PassedPBT", "VerifiedBounded", "VerifiedFull")
COMPONENTS = ("generator", "compile", "repair", "oracle", "pbt", "bounded", "full")
LANGUAGE_LABEL = {"C": "C", "CPP": "C++", "Go": "Go"}


def status_rank(status: str) -> int:
    return STATUSES.index(status)


@dataclass
class AttemptRecord:
    attempt_index: int
    candidate: str
    repair_rounds: int = 0
    compiled: bool = False
    outcomes: list[VerificationOutcome] = field(default_factory=list)
    counterexample: tuple | None = None
    safe: bool = True
    prompt: str = ""
    error: str = ""

    @property
    def deepest(self) -> str:
        passed = [o.stage for o in self.outcomes if o.status == PASS]
        return {0: "Failed", 1: "PassedPBT", 2: "VerifiedBounded", 3: "VerifiedFull"}[len(passed)]

    def to_json(self, timings: bool = True) -> dict:
        outs = []
        for o in self.outcomes:
            d = o.to_json()
            if not timings:
                d.pop("duration")
            outs.append(d)
        return {
            "attempt_index": self.attempt_index,
            "safe": self.safe,
            "compiled": self.compiled,
            "repair_rounds": self.repair_rounds,
            "outcomes": outs,
            "counterexample": list(self.counterexample) if self.counterexample is not None else None,
            "error": self.error,
            "prompt": self.prompt,
            "candidate": self.candidate,
        }


@dataclass
class PipelineReport:
    program_id: str
    language: str
    status: str
    attempts: list[AttemptRecord]
    final_candidate: str | None
    timings: dict[str, float]
    error: str = ""

    def to_json(self, timings: bool = True) -> dict:
        d = {
            "program_id": self.program_id,
            "language": self.language,
            "status": self.status,
            "error": self.error,
            "attempt_count": len(self.attempts),
            "final_candidate": self.final_candidate,
            "attempts": [a.to_json(timings) for a in self.attempts],
        }
        if timings:
            d["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return d

    def dumps(self, timings: bool = True) -> str:
        return json.dumps(self.to_json(timings), indent=2, sort_keys=True) + "\n"

    def render_text(self) -> str:
        lines = [f"program {self.program_id} ({self.language}): {self.status}"]
        if self.error:
            lines.append(f"  error: {self.error}")
        for a in self.attempts:
            stages = " -> ".join(f"{o.stage}:{o.status}" + (f"@k={o.unwind_bound}" if o.unwind_bound else "")
                                 for o in a.outcomes) or "-"
            flags = ("unsafe " if not a.safe else "") + ("compiled" if a.compiled else "not compiled")
            ce = f"  counterexample={list(a.counterexample)}" if a.counterexample is not None else ""
            lines.append(f"  attempt {a.attempt_index:2d}: {flags}, repairs={a.repair_rounds}, {stages}{ce}"
                         + (f"  [{a.error}]" if a.error else ""))
        lines.append("  time (s): " + ", ".join(f"{k}={self.timings.get(k, 0.0):.2f}" for k in COMPONENTS))
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        j = out / f"{self.program_id}.report.json"
        t = out / f"{self.program_id}.report.txt"
        j.write_text(self.dumps())
        t.write_text(self.render_text())
        return j, t


class _Timer:
    def __init__(self):
        self.totals = {k: 0.0 for k in COMPONENTS}

    @contextmanager
    def __call__(self, component: str):
        t0 = time.monotonic()
        try:
            yield
        finally:
            self.totals[component] += time.monotonic() - t0


def final_status(attempts: list[AttemptRecord]) -> str:
    """Deepest stage passed by the last attempt that passed any stage."""
    for a in reversed(attempts):
        if a.deepest != "Failed":
            return a.deepest
    return "Failed"


def rustc_check(tools, directory: Path, timeout: float):
    """A compile callback for the repair loop: type-check as a library, JSON errors."""
    def compile(text: str) -> CompileResult:
        src = directory / "candidate.rs"
        src.write_text(text)
        r = run([tools.rustc, "--edition", tools.rust_edition, "--crate-type", "lib", "--emit=metadata",
                 "--error-format=json", "-A", "warnings", "-o", str(directory / "candidate.rmeta"), str(src)],
                timeout=timeout, cwd=str(directory))
        return CompileResult(r.ok, r.stderr, r.returncode)
    return compile


def _fresh_dir(path: Path) -> Path:
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)
    return path


def _should_stop(outcomes: list[VerificationOutcome], cfg: PipelineConfig) -> bool:
    if not outcomes or outcomes[0].status != PASS:
        return False
    last = outcomes[-1]
    if last.status == PASS:
        return True  # every configured stage passed
    if last.status == TIMEOUT:
        # a timeout after a pass is reported at the deepest stage passed
        return not (cfg.require_bounded and last.stage == "Bounded")
    return False


@dataclass
class OracleSetup:
    oracle: object
    points: list
    wrapper: object


def prepare_oracle(source: SourceProgram, workspace: str | Path, config: PipelineConfig) -> OracleSetup:
    """Compile, lift and wrap the source once; shared by every attempt."""
    ws = Path(workspace)
    oracle = build_oracle(source, ws, config.tools, config.stage_time_limit)
    points = identify_injection_points(source, ws, config.tools, config.stage_time_limit, oracle)
    return OracleSetup(oracle, points, generate_wrapper(oracle, points))


def candidate_harness(text: str, target: str, wrapper, points) -> Harness:
    sig = parse_rust_signature(text, target)
    strategy = derive_input_strategy(sig.param_types, decls=parse_type_decls(text))
    injected = {p.slot_index for p in points if p.kind == "Input"}
    if injected != set(range(len(strategy))):
        raise UnsupportedType(f"oracle injects slots {sorted(injected)}, "
                              f"candidate takes {len(strategy)} arguments")
    return generate_equivalence_harness(wrapper, sig, strategy, points)


def build_candidate_harness(source: SourceProgram, candidate: str, workspace: str | Path,
                            config: PipelineConfig, setup: OracleSetup | None = None) -> Harness:
    """Oracle plus equivalence harness for one fixed candidate, written under ``workspace``."""
    ws = Path(workspace)
    setup = setup or prepare_oracle(source, ws / "oracle", config)
    harness = candidate_harness(candidate, source.target_fn_name, setup.wrapper, setup.points)
    write_harness(harness, candidate, ws / "harness", config.tools.rust_edition)
    return harness


def transpile(source: SourceProgram, config: PipelineConfig, backend: Backend | None = None) -> PipelineReport:
    which(config.tools.rustc)
    which(config.tools.clang if source.language == "C" else config.tools.clangxx)
    backend = backend or make_backend(config.backend)
    timer = _Timer()
    root = Path(config.workspace_dir) if config.workspace_dir else Path(tempfile.mkdtemp(prefix="vert-"))
    ws = _fresh_dir(root / source.program_id)
    vcfg = config.verifier()
    stages = ("PBT", "Bounded", "Full") if config.run_full else ("PBT", "Bounded")

    _, cleaned = clean_source(source.text, source.language)
    with timer("oracle"):
        setup = prepare_oracle(source, ws / "oracle", config)
    points, wrapper = setup.points, setup.wrapper

    attempts: list[AttemptRecord] = []
    counterexamples: list[tuple] = []
    label = LANGUAGE_LABEL.get(source.language, source.language)
    for n in range(1, config.max_attempts + 1):
        adir = _fresh_dir(ws / f"attempt-{n:02d}")
        prompt = render_prompt(cleaned.strip() + "\n", counterexamples, label)
        with timer("generator"):
            try:
                resp = generate_candidate(prompt, backend, source.program_id, n)
            except FixtureExhausted:
                break
        rec = AttemptRecord(n, resp.extracted, prompt=prompt.rendered, safe=resp.safe)
        attempts.append(rec)
        if not resp.safe:
            rec.error = "candidate uses unsafe code"
            continue
        if not resp.extracted.strip():
            rec.error = "response holds no code"
            continue
        compile_fn = rustc_check(config.tools, adir, config.stage_time_limit)
        first = True

        def timed_compile(text: str) -> CompileResult:
            nonlocal first
            with timer("compile" if first else "repair"):
                first = False
                return compile_fn(text)
        text, ok, rounds = repair_loop(resp.extracted, timed_compile, config.max_repair_rounds)
        rec.candidate, rec.compiled, rec.repair_rounds = text, ok, rounds
        if not ok:
            rec.error = "candidate does not compile"
            continue
        try:
            harness = candidate_harness(text, source.target_fn_name, wrapper, points)
        except VertError as e:
            rec.error = f"no harness: {e}"
            continue
        write_harness(harness, text, adir / "harness", config.tools.rust_edition)
        outcomes = run_cascade(harness, vcfg, stages)
        for o in outcomes:
            timer.totals[o.stage.lower()] += o.duration
        rec.outcomes = outcomes
        failing = outcomes[-1]
        if failing.counterexample is not None:
            rec.counterexample = tuple(failing.counterexample)
            if rec.counterexample not in counterexamples:
                counterexamples.append(rec.counterexample)
        if _should_stop(outcomes, config):
            break

    status = final_status(attempts)
    final = next((a.candidate for a in reversed(attempts) if a.deepest != "Failed"), None)
    return PipelineReport(source.program_id, source.language, status, attempts, final, timer.totals)
