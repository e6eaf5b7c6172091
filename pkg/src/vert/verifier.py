"""The equivalence cascade: property-based testing, bounded and full checking.

Every stage runs its tools as subprocesses under a wall-clock deadline owned
by this module; a killed stage is a Timeout, which counts as failure.
"""

from __future__ import annotations

import json
import re
import shlex
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .config import ToolConfig, VerifierConfig
from .errors import UnparseableTrace
from .harness import Harness, InputStrategy, combine_wide_draws, decode_values, draw_plan, encode_values
from .toolchain import RunResult, run

STAGES = ("PBT", "Bounded", "Full")
PASS, COUNTEREXAMPLE, TIMEOUT, TOOL_ERROR = "Pass", "Counterexample", "Timeout", "ToolError"

PBT_BINARY = "vert_pbt"
SYMBOLIC_WASM = "vert_symbolic.wasm"
# grace period between a checker's own deadline and the runner's kill
KILL_SLACK = 0.5


@dataclass(frozen=True)
class VerificationOutcome:
    stage: str
    status: str
    duration: float
    unwind_bound: int | None = None
    raw_log: str = ""
    counterexample: tuple | None = None
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json(self, include_log: bool = False) -> dict:
        d = {
            "stage": self.stage,
            "status": self.status,
            "duration": round(self.duration, 3),
            "unwind_bound": self.unwind_bound,
            "counterexample": list(self.counterexample) if self.counterexample is not None else None,
            "message": self.message,
        }
        if include_log:
            d["raw_log"] = self.raw_log
        return d


def _require_dir(harness: Harness) -> Path:
    if harness.directory is None:
        raise ValueError("harness has not been written to disk (see write_harness)")
    return Path(harness.directory)


def _log(r: RunResult) -> str:
    return f"$ {shlex.join(r.argv)}\n{r.stdout}{r.stderr}"


class _Clock:
    def __init__(self, limit: float):
        self.t0 = time.monotonic()
        self.limit = limit

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.t0

    @property
    def left(self) -> float:
        return self.limit - self.elapsed


# -- builds --------------------------------------------------------------

def build_pbt(harness: Harness, tools: ToolConfig, timeout: float) -> RunResult:
    d = _require_dir(harness)
    argv = [tools.rustc, "--edition", tools.rust_edition, "--test", "-C", "opt-level=1",
            "-C", "overflow-checks=on", "-C", "debug-assertions=on", "harness.rs", "-o", PBT_BINARY]
    return run(argv, timeout=max(timeout, 0.1), cwd=str(d))


def build_symbolic(harness: Harness, tools: ToolConfig, timeout: float) -> RunResult:
    # -O0 keeps division as division; at -O1 LLVM turns it into magic
    # multiplications that the solver handles far worse
    d = _require_dir(harness)
    argv = [tools.rustc, "--edition", tools.rust_edition, "--target", "wasm32-unknown-unknown",
            "--crate-type", "cdylib", "-C", "opt-level=0", "-C", "panic=abort", "--cfg", "vert_symbolic",
            "harness.rs", "-o", SYMBOLIC_WASM]
    return run(argv, timeout=max(timeout, 0.1), cwd=str(d))


# -- PBT -----------------------------------------------------------------

def run_pbt(harness: Harness, cfg: VerifierConfig) -> VerificationOutcome:
    clock = _Clock(cfg.stage_time_limit)
    d = _require_dir(harness)
    b = build_pbt(harness, cfg.tools, clock.left)
    if b.timed_out:
        return VerificationOutcome("PBT", TIMEOUT, clock.elapsed, None, _log(b), message="harness build timed out")
    if not b.ok:
        return VerificationOutcome("PBT", TOOL_ERROR, clock.elapsed, None, _log(b), message="harness build failed")
    budget = max(0.5, clock.left - cfg.pbt_margin)
    env = {"VERT_SEED": str(cfg.pbt_seed), "VERT_CASES": str(cfg.pbt_cases), "VERT_TIME_BUDGET": f"{budget:.3f}"}
    r = run([str(d / PBT_BINARY), "--exact", "vert_equivalence", "--nocapture", "--test-threads=1"],
            timeout=max(clock.left, 0.1), cwd=str(d), env=env)
    log = _log(b) + _log(r)
    if r.timed_out:
        return VerificationOutcome("PBT", TIMEOUT, clock.elapsed, None, log,
                                   message=f"no verdict within {cfg.stage_time_limit:g} s")
    if r.returncode == 0 and "VERT_PBT_PASS" in r.stdout:
        return VerificationOutcome("PBT", PASS, clock.elapsed, None, log)
    # a failing test exits 101 and always prints the failure line first
    if r.returncode == 101 and _PBT_LINE.search(r.stdout):
        values = extract_counterexample(r.stdout, harness.input_signature)
        return VerificationOutcome("PBT", COUNTEREXAMPLE, clock.elapsed, None, log, values,
                                   _pbt_message(r.stdout))
    return VerificationOutcome("PBT", TOOL_ERROR, clock.elapsed, None, log,
                               message=f"driver exited with status {r.returncode}")


_PBT_LINE = re.compile(r"(?:^|\s)VERT_PBT_FAILURE(?P<shrunk> shrunk)? inputs=\[(?P<inputs>.*?)\] "
                       r"draws=\[(?P<draws>[-\d,]*)\] message=(?P<msg>.*)$", re.M)


def _pbt_message(log: str) -> str:
    ms = list(_PBT_LINE.finditer(log))
    if not ms:
        return ""
    try:
        return json.loads(ms[-1].group("msg"))
    except json.JSONDecodeError:
        return ms[-1].group("msg")


# -- model checking --------------------------------------------------------

def _symbolic_run(harness: Harness, cfg: VerifierConfig, unwind: int, checks: bool,
                  time_left: float) -> RunResult:
    d = _require_dir(harness)
    tools = cfg.tools
    if tools.checker == "kani":
        argv = shlex.split(tools.kani) + ["--harness", "vert_equivalence", tools.kani_unwind_flag, str(unwind)]
        if not checks:
            argv.append(tools.kani_unwind_checks_off)
        argv += shlex.split(tools.kani_extra)
        return run(argv, timeout=max(time_left, 0.1) + KILL_SLACK, cwd=str(d))
    python = tools.python if tools.python else sys.executable
    argv = [python, "-m", "vert.wasm.symbolic", SYMBOLIC_WASM, "--entry", "vert_proof", "--unwind", str(unwind),
            "--time-limit", f"{max(time_left, 0.1):.3f}"]
    if checks:
        argv.append("--unwinding-assertions")
    return run(argv, timeout=max(time_left, 0.1) + KILL_SLACK, cwd=str(d))


def _classify_check(r: RunResult) -> str:
    """pass | counterexample | unwind | timeout | error, from exit status and trace shape."""
    if r.timed_out:
        return "timeout"
    m = re.search(r"^VERT-CHECK (\{.*\})$", r.stdout, re.M)
    if m:
        status = json.loads(m.group(1))["status"]
        expected = {"pass": 0, "counterexample": 1, "unwind": 1, "timeout": 3}.get(status)
        return status if expected == r.returncode else "error"
    # Kani's textual summary
    if "VERIFICATION:- SUCCESSFUL" in r.stdout and r.returncode == 0:
        return "pass"
    if "VERIFICATION:- FAILED" in r.stdout and r.returncode not in (0, None):
        failed = re.findall(r"^Check \d+: .*?\n\s*- Status: FAILURE\n\s*- Description: \"(.*?)\"", r.stdout, re.M)
        if failed and all("unwinding assertion" in f for f in failed):
            return "unwind"
        return "counterexample"
    return "error"


def _checker_stage(stage: str, harness: Harness, cfg: VerifierConfig, clock: _Clock, checks: bool) -> VerificationOutcome:
    logs = []
    if cfg.tools.checker != "kani":
        b = build_symbolic(harness, cfg.tools, clock.left)
        logs.append(_log(b))
        if b.timed_out:
            return VerificationOutcome(stage, TIMEOUT, clock.elapsed, None, "".join(logs),
                                       message="harness build timed out")
        if not b.ok:
            return VerificationOutcome(stage, TOOL_ERROR, clock.elapsed, None, "".join(logs),
                                       message="harness build failed")
    k = cfg.initial_unwind
    while True:
        if clock.left <= 0:
            return VerificationOutcome(stage, TIMEOUT, clock.elapsed, k, "".join(logs),
                                       message=f"no verdict within {cfg.stage_time_limit:g} s")
        r = _symbolic_run(harness, cfg, k, checks, clock.left)
        logs.append(_log(r))
        status = _classify_check(r)
        log = "".join(logs)
        if status == "pass":
            return VerificationOutcome(stage, PASS, clock.elapsed, k, log)
        if status == "counterexample":
            try:
                values = extract_counterexample(r.stdout, harness.input_signature)
            except UnparseableTrace as e:
                return VerificationOutcome(stage, TOOL_ERROR, clock.elapsed, k, log, message=str(e))
            return VerificationOutcome(stage, COUNTEREXAMPLE, clock.elapsed, k, log, values, _check_reason(r.stdout))
        if status == "timeout":
            return VerificationOutcome(stage, TIMEOUT, clock.elapsed, k, log,
                                       message=f"no verdict within {cfg.stage_time_limit:g} s")
        if status == "unwind" and checks:
            k *= cfg.unwind_growth
            continue
        return VerificationOutcome(stage, TOOL_ERROR, clock.elapsed, k, log,
                                   message=_check_reason(r.stdout) or f"checker exited with status {r.returncode}")


def _check_reason(log: str) -> str:
    m = re.search(r"^VERT-CHECK (\{.*\})$", log, re.M)
    if m:
        return json.loads(m.group(1)).get("reason", "")
    m = re.search(r"^Failed Checks: (.*)$", log, re.M)
    return m.group(1) if m else ""


def run_bounded(harness: Harness, cfg: VerifierConfig) -> VerificationOutcome:
    """Model check with unwind bound k and unwinding assertions off."""
    clock = _Clock(cfg.stage_time_limit)
    return _checker_stage("Bounded", harness, cfg, clock, checks=False)


def run_full(harness: Harness, cfg: VerifierConfig) -> VerificationOutcome:
    """Model check with unwinding assertions on, growing k geometrically until exhaustive."""
    clock = _Clock(cfg.stage_time_limit)
    return _checker_stage("Full", harness, cfg, clock, checks=True)


def run_cascade(harness: Harness, cfg: VerifierConfig, stages: tuple[str, ...] = STAGES) -> list[VerificationOutcome]:
    runners = {"PBT": run_pbt, "Bounded": run_bounded, "Full": run_full}
    outcomes: list[VerificationOutcome] = []
    for stage in STAGES:
        if stage not in stages:
            break
        o = runners[stage](harness, cfg)
        outcomes.append(o)
        if not o.passed:
            break
    return outcomes


# -- counterexamples -----------------------------------------------------

def _kani_values(log: str) -> list[int] | None:
    """Concrete-playback byte vectors, one per kani::any() draw (little endian)."""
    block = re.search(r"concrete_vals\s*:\s*Vec<Vec<u8>>\s*=\s*vec!\[(.*?)\];", log, re.S)
    if not block:
        return None
    out = []
    for m in re.finditer(r"vec!\[([\d,\s]*)\]", block.group(1)):
        bs = bytes(int(x) for x in m.group(1).replace(" ", "").split(",") if x)
        out.append(int.from_bytes(bs, "little", signed=True))
    return out


def extract_draws(raw_log: str, signature: list[InputStrategy]) -> list[int]:
    """Per-draw values of the failing input named in a failure log."""
    ms = list(_PBT_LINE.finditer(raw_log))
    if ms:
        shrunk = [m for m in ms if m.group("shrunk")]
        m = (shrunk or ms)[-1]
        return [int(x) for x in m.group("draws").split(",") if x.strip()]
    m = re.search(r"^VERT-CHECK (\{.*\})$", raw_log, re.M)
    if m:
        rec = json.loads(m.group(1))
        if rec.get("status") == "counterexample" and rec.get("counterexample") is not None:
            plan = draw_plan(signature)
            raw = list(rec["counterexample"])
            try:
                return combine_wide_draws(plan, raw)
            except IndexError as e:
                raise UnparseableTrace("checker trace has fewer draws than the harness makes") from e
    kv = _kani_values(raw_log)
    if kv is not None and "VERIFICATION:- FAILED" in raw_log:
        return kv
    raise UnparseableTrace("log holds no counterexample")


def extract_counterexample(raw_log: str, signature: list[InputStrategy]) -> tuple:
    """One concrete value per input slot, decoded from a failure trace."""
    draws = extract_draws(raw_log, signature)
    if len(draws) < len(draw_plan(signature)):
        raise UnparseableTrace(f"trace has {len(draws)} draws, harness makes {len(draw_plan(signature))}")
    return tuple(decode_values(signature, draws))


def replay_counterexample(harness: Harness, values, cfg: VerifierConfig) -> bool:
    """Run the PBT build once on ``values``; True if the divergence reproduces."""
    d = _require_dir(harness)
    if not (d / PBT_BINARY).exists():
        b = build_pbt(harness, cfg.tools, cfg.stage_time_limit)
        if not b.ok:
            raise RuntimeError("harness build failed:\n" + _log(b))
    draws = encode_values(harness.input_signature, list(values))
    r = run([str(d / PBT_BINARY), "--exact", "vert_equivalence", "--nocapture", "--test-threads=1"],
            timeout=cfg.stage_time_limit, cwd=str(d), env={"VERT_REPLAY": ",".join(map(str, draws))})
    if "VERT_REPLAY_PASS" in r.stdout and r.returncode == 0:
        return False
    if _PBT_LINE.search(r.stdout) and r.returncode == 101:
        return True
    raise RuntimeError("replay run ended without a verdict:\n" + _log(r))


def sample_inputs(harness: Harness, cfg: VerifierConfig, cases: int) -> list[tuple[list[int], list[str]]]:
    """Run ``cases`` PBT cases with tracing on; (draws, rendered inputs) per case."""
    d = _require_dir(harness)
    if not (d / PBT_BINARY).exists():
        b = build_pbt(harness, cfg.tools, cfg.stage_time_limit)
        if not b.ok:
            raise RuntimeError("harness build failed:\n" + _log(b))
    trace = d / "vert-trace.tsv"
    r = run([str(d / PBT_BINARY), "--exact", "vert_equivalence", "--nocapture", "--test-threads=1"],
            timeout=cfg.stage_time_limit, cwd=str(d),
            env={"VERT_SEED": str(cfg.pbt_seed), "VERT_CASES": str(cases), "VERT_TRACE": str(trace)})
    if not trace.exists():
        raise RuntimeError("driver wrote no trace:\n" + _log(r))
    out = []
    for line in trace.read_text().splitlines():
        draws, *notes = line.split("\t")
        out.append(([int(x) for x in draws.strip("[]").split(",") if x.strip()], notes))
    return out
