import sys
import time

import pytest

from vert.config import PipelineConfig, VerifierConfig, apply_overrides, load_config
from vert.errors import NoEntryConstants, ToolchainMissing, UnsupportedType
from vert.source import SourceProgram, c_type_to_prim, entry_literals, guess_target, parse_signature
from vert.toolchain import run, which

from conftest import PROGRAMS


def test_reverse_entry_literals(reverse_source):
    lits = entry_literals(reverse_source)
    assert [(l.role, l.value, l.prim, l.slot) for l in lits] == [("input", 123, "i32", 0), ("output", 321, "i32", 0)]
    for l in lits:
        assert reverse_source.entry_call[l.start:l.end] == l.text


def test_literal_slots_follow_parameter_positions():
    src = SourceProgram("C", "int f(int a, int b, int c) { return a + b + c; }",
                        "int g(int y) { return f(y, -4, 0x10) == 7 ? 0 : 1; }", "f")
    lits = entry_literals(src)
    assert [(l.slot, l.value) for l in lits if l.role == "input"] == [(1, -4), (2, 16)]
    assert [l.value for l in lits if l.role == "output"] == [7]


def test_zero_literal_arguments():
    src = SourceProgram.from_dir(PROGRAMS / "no_args")
    with pytest.raises(NoEntryConstants):
        entry_literals(src)


def test_source_program_invariants():
    with pytest.raises(ValueError):
        SourceProgram("C", "int f(void) { return 1; }", "int g() { return h(1) == 1; }", "f")
    with pytest.raises(ValueError):
        SourceProgram("Rust", "fn f() {}", "f()", "f")


def test_signatures_and_types():
    sig = parse_signature("unsigned int f(long long a, const char *s, unsigned char c) { return 0; }", "C", "f")
    assert (sig.params, sig.ret, sig.param_names) == (["i64", "str", "u8"], "u32", ["a", "s", "c"])
    go = parse_signature("func f(a, b int32) uint { return 0 }", "Go", "f")
    assert (go.params, go.ret) == (["i32", "i32"], "u64")
    with pytest.raises(UnsupportedType):
        c_type_to_prim("double")
    assert guess_target("int h(int x) { return x; }\nint main() { return h(1); }",
                        "int call() { return h(2) == 2 ? 0 : 1; }", "C") == "h"


def test_config_defaults_and_validation():
    cfg = PipelineConfig()
    assert (cfg.max_attempts, cfg.stage_time_limit) == (20, 120.0)
    for bad in ({"max_attempts": 0}, {"stage_time_limit": 0}, {"default_unwind_bound": 0}):
        with pytest.raises(ValueError):
            PipelineConfig(**bad)
    with pytest.raises(ValueError):
        VerifierConfig(unwind_growth=1)


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "vert.cfg"
    p.write_text("max_attempts = 5  # fewer\nbackend.kind = remote\nrun_full = no\ntools.rustc = /usr/bin/rustc\n")
    cfg = load_config(p, {"max_attempts": "7", "stage_time_limit": "9.5"})
    assert (cfg.max_attempts, cfg.stage_time_limit, cfg.backend.kind, cfg.run_full) == (7, 9.5, "remote", False)
    assert cfg.tools.rustc == "/usr/bin/rustc"
    with pytest.raises(ValueError):
        apply_overrides(PipelineConfig(), {"nonsense": "1"})
    with pytest.raises(ValueError):
        apply_overrides(PipelineConfig(), {"max_attempts": "0"})


def test_run_kills_at_deadline():
    t0 = time.monotonic()
    r = run([sys.executable, "-c", "import time; time.sleep(30)"], timeout=1.0)
    assert r.timed_out and r.returncode is None and not r.ok
    assert time.monotonic() - t0 < 3.0


def test_missing_tool():
    with pytest.raises(ToolchainMissing):
        which("definitely-not-a-tool-vert")
