"""Acceptance criteria, runnable offline with the scripted backend.

Each test records a one-line verdict that pytest prints in its terminal summary.
"""

import shutil
import time
from contextlib import contextmanager

import pytest

from conftest import (ACCEPTANCE, CANDIDATES, FIXTURES, PAIRS, PROGRAMS, SUITE, make_config, needs_rust,
                      needs_toolchain)
from vert.batch import run_batch
from vert.config import PipelineConfig, ToolConfig
from vert.diagnostics import repair_loop
from vert.generator import format_counterexample
from vert.harness import (decode_values, derive_input_strategy, generate_equivalence_harness, parse_rust_signature,
                          parse_type_decls, write_harness)
from vert.oracle import build_oracle, lifted_diff_lines
from vert.pipeline import build_candidate_harness, prepare_oracle, rustc_check, transpile
from vert.source import SourceProgram, entry_literals
from vert.verifier import COUNTEREXAMPLE, PASS, TIMEOUT, run_bounded, run_full, run_pbt, sample_inputs

STAGE_LIMIT = 120.0


@contextmanager
def criterion(n: int, title: str):
    t0 = time.monotonic()
    try:
        yield
    except BaseException as e:
        ACCEPTANCE[n] = ("FAIL", f"{title} ({type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''})")
        print(f"criterion {n}: FAIL {title}")
        raise
    ACCEPTANCE[n] = ("PASS", f"{title} [{time.monotonic() - t0:.1f}s]")
    print(f"criterion {n}: PASS {title}")


def _pair(name, tmp_path, limit, k):
    d = PAIRS / name
    cfg = PipelineConfig(stage_time_limit=limit, default_unwind_bound=k)
    h = build_candidate_harness(SourceProgram.from_dir(d), (d / "candidate.rs").read_text(), tmp_path, cfg)
    return h, cfg.verifier()


@needs_rust
def test_1_repair_fidelity(tmp_path):
    with criterion(1, "repair loop fixes delimiter, borrow and mutability fixtures in <= 2 rounds, < 10 s"):
        t0 = time.monotonic()
        check = rustc_check(ToolConfig(), tmp_path, 60)
        for kind in ("delimiter", "borrow", "mutability"):
            _, ok, rounds = repair_loop((FIXTURES / "repair" / f"{kind}.rs").read_text(), check)
            assert ok and rounds <= 2, (kind, ok, rounds)
        assert time.monotonic() - t0 < 10.0


@needs_toolchain
def test_2_sign_flip_caught_then_fix_verified(tmp_path):
    with criterion(2, "sign-flip reverse rejected at PBT, fix passes PBT and bounded at k=10, < 240 s"):
        t0 = time.monotonic()
        cfg = make_config(tmp_path, stage_time_limit=STAGE_LIMIT, default_unwind_bound=10, run_full=False)
        report = transpile(SourceProgram.from_dir(PROGRAMS / "reverse"), cfg)
        first, second = report.attempts
        assert [(o.stage, o.status) for o in first.outcomes] == [("PBT", COUNTEREXAMPLE)]
        assert first.counterexample is not None
        assert [(o.stage, o.status, o.unwind_bound) for o in second.outcomes][1] == ("Bounded", PASS, 10)
        assert second.outcomes[0].status == PASS
        assert report.status == "VerifiedBounded"
        assert time.monotonic() - t0 < 2 * STAGE_LIMIT


def _mutant(source, values):
    entry = source.entry_call
    lits = entry_literals(source)
    for k in sorted(values, key=lambda k: -lits[k].start):
        entry = entry[:lits[k].start] + values[k] + entry[lits[k].end:]
    return SourceProgram(source.language, source.text, entry, source.target_fn_name, source.program_id)


@needs_toolchain
def test_3_injection_points_are_exact(tmp_path):
    with criterion(3, "reverse oracle has exactly one Input and one OutputBaseline point, diff lines match, deterministic"):
        src = SourceProgram.from_dir(PROGRAMS / "reverse")
        cfg = PipelineConfig()
        a = prepare_oracle(src, tmp_path / "a", cfg)
        b = prepare_oracle(src, tmp_path / "b", cfg)
        assert [p.kind for p in a.points] == ["Input", "OutputBaseline"]
        assert a.points == b.points and a.oracle.lifted_text == b.oracle.lifted_text
        mutated = build_oracle(_mutant(src, {0: "456", 1: "654"}), tmp_path / "m")
        assert sorted(lifted_diff_lines(a.oracle.lifted_text, mutated.lifted_text)) == sorted(p.line for p in a.points)


@needs_toolchain
def test_4_cascade_discipline(tmp_path):
    with criterion(4, "6-fixture suite: every outcome list is a Pass-prefix and the count chain holds"):
        bench = tmp_path / "bench"
        shutil.copytree(SUITE, bench)
        cfg = make_config(tmp_path, stage_time_limit=30.0, default_unwind_bound=4)
        report = run_batch(bench, cfg, jobs=3)
        assert len(report.programs) == 6 and not any(r.error for r in report.programs)
        for r in report.programs:
            for a in r.report.attempts:
                ok = [o.status == PASS for o in a.outcomes]
                assert ok[:-1] == [True] * (len(ok) - 1) if ok else True, r.program_id
                assert [o.stage for o in a.outcomes] == ["PBT", "Bounded", "Full"][:len(ok)]
        assert report.chain_holds()
        status = {r.program_id: r.status for r in report.programs}
        assert status["non_compiling"] == "Failed" and status["full_pass"] == "VerifiedFull"
        assert status["bounded_cex"] == "PassedPBT" and status["bounded_timeout"] == "PassedPBT"


@needs_toolchain
def test_5_timeout_enforced(tmp_path):
    with criterion(5, "infinite-loop candidate's PBT stage ends within 122 s and counts as a failure"):
        h, v = _pair("infinite_loop", tmp_path, STAGE_LIMIT, 10)
        t0 = time.monotonic()
        o = run_pbt(h, v)
        assert time.monotonic() - t0 <= STAGE_LIMIT + 2.0
        assert o.status == TIMEOUT and not o.passed


@needs_toolchain
def test_6_attempt_budget_and_feedback(tmp_path):
    with criterion(6, "20 failing candidates stop at 20 attempts and every counterexample reaches later prompts"):
        cfg = make_config(tmp_path, default_unwind_bound=4)
        report = transpile(SourceProgram.from_dir(PROGRAMS / "clamp_failing"), cfg)
        assert len(report.attempts) == 20 and report.status == "Failed"
        assert all(a.counterexample is not None for a in report.attempts)
        for prev, nxt in zip(report.attempts, report.attempts[1:]):
            assert format_counterexample(prev.counterexample) in nxt.prompt


@needs_toolchain
def test_7_bounded_blindness(tmp_path):
    with criterion(7, "pair diverging past k iterations passes bounded at k=10 and fails full verification"):
        h, v = _pair("blind", tmp_path, 60.0, 10)
        b = run_bounded(h, v)
        assert (b.status, b.unwind_bound) == (PASS, 10)
        f = run_full(h, v)
        assert f.status == COUNTEREXAMPLE
        assert (f.counterexample[0] & 31) > 12


@needs_rust
def test_8_assumption_soundness(tmp_path):
    with criterion(8, "10^5 generated inputs: u32 slot within [0, 2^32-1], string bytes ASCII"):
        d = PAIRS / "assumptions"
        text = (d / "candidate.rs").read_text()
        sig = parse_rust_signature(text, "weigh")
        strat = derive_input_strategy(sig.param_types, None, parse_type_decls(text))
        h = generate_equivalence_harness(None, sig, strat, reference=(d / "reference.rs").read_text())
        write_harness(h, text, tmp_path)
        cases = sample_inputs(h, PipelineConfig(stage_time_limit=STAGE_LIMIT).verifier(), 10**5)
        assert len(cases) == 10**5
        for draws, _ in cases:
            n, s = decode_values(strat, draws)
            assert 0 <= n <= 2**32 - 1
            assert all(ord(c) < 128 for c in s)
            # the raw draws for the string bytes stay ASCII too, not only the decoded text
            assert all(0 <= x < 128 for x in draws[2:2 + len(s)])
