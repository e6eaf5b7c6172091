import shutil

import pytest
from hypothesis import given, strategies as st

import vert.oracle as oracle_mod
from vert.config import ToolConfig
from vert.errors import NoEntryConstants, OracleBuildFailed, ToolchainMissing
from vert.oracle import (build_oracle, compile_to_wasm, fresh_literals, identify_injection_points, lift_to_target,
                         lifted_diff_lines, wasm_const)
from vert.source import INT_BITS, Literal, SourceProgram, entry_literals
from vert.toolchain import run

from conftest import PROGRAMS, needs_toolchain

pytestmark = needs_toolchain


def _mutant(source: SourceProgram, values: dict[int, str]) -> SourceProgram:
    """Entry call with literal i replaced by values[i] (C text)."""
    entry = source.entry_call
    for lit in sorted(entry_literals(source), key=lambda l: -l.start):
        k = entry_literals(source).index(lit)
        if k in values:
            entry = entry[:lit.start] + values[k] + entry[lit.end:]
    return SourceProgram(source.language, source.text, entry, source.target_fn_name, source.program_id)


def test_two_builds_are_byte_identical(reverse_source, tmp_path):
    a = compile_to_wasm(reverse_source, tmp_path / "a")
    b = compile_to_wasm(reverse_source, tmp_path / "b")
    assert a == b and a[:4] == b"\0asm"


def test_go_programs_report_missing_support(tmp_path):
    src = SourceProgram.from_dir(PROGRAMS / "reverse_go")
    assert src.language == "Go"
    with pytest.raises(ToolchainMissing):
        compile_to_wasm(src, tmp_path)


def test_degenerate_translation_unit_is_recorded(tmp_path):
    src = SourceProgram("C", "int f(void);", "int g(void) { return f() == 1 ? 0 : 1; }", "f")
    # f is declared but never defined: either the link fails or wasm-ld leaves an import
    try:
        data = compile_to_wasm(src, tmp_path)
    except OracleBuildFailed as e:
        assert "failed" in str(e)
    else:
        assert isinstance(data, bytes)


def test_lifted_reverse_holds_entry_and_literals(reverse_setup):
    text = reverse_setup.oracle.lifted_text
    assert "pub fn callReverse(&mut self" in text
    assert "123i32" in text and "321i32" in text
    assert reverse_setup.oracle.entry_fn_symbol == "callReverse"


def test_lifting_is_deterministic(reverse_source, tmp_path):
    wasm = compile_to_wasm(reverse_source, tmp_path)
    a = lift_to_target(wasm, "callReverse")
    b = lift_to_target(wasm, "callReverse")
    assert a.lifted_text == b.lifted_text and a.build_fingerprint == b.build_fingerprint


def test_lifted_text_compiles(reverse_setup, tmp_path):
    p = tmp_path / "lifted.rs"
    p.write_text(reverse_setup.oracle.lifted_text)
    r = run(["rustc", "--edition", "2021", "--crate-type", "lib", "--emit=metadata", "-A", "warnings",
             "-o", str(tmp_path / "lifted.rmeta"), str(p)], timeout=120)
    assert r.ok, r.stderr[-2000:]


def test_reverse_has_exactly_two_points(reverse_setup):
    pts = reverse_setup.points
    assert [(p.kind, p.original_literal, p.slot_index) for p in pts] == [
        ("Input", (123, "i32"), 0), ("OutputBaseline", (321, "i32"), 0)]
    assert pts[0].line != pts[1].line


def test_mutating_456_and_654_changes_exactly_the_point_lines(reverse_source, reverse_setup, tmp_path):
    mutated = build_oracle(_mutant(reverse_source, {0: "456", 1: "654"}), tmp_path)
    lines = lifted_diff_lines(reverse_setup.oracle.lifted_text, mutated.lifted_text)
    assert sorted(lines) == sorted(p.line for p in reverse_setup.points)
    new = mutated.lifted_text.splitlines()
    assert "456i32" in new[reverse_setup.points[0].line]
    assert "654i32" in new[reverse_setup.points[1].line]


def test_identification_is_deterministic(reverse_source, reverse_setup, tmp_path):
    again = identify_injection_points(reverse_source, tmp_path, oracle=reverse_setup.oracle)
    assert again == reverse_setup.points


def test_other_fresh_literals_find_the_same_points(reverse_source, reverse_setup, tmp_path, monkeypatch):
    def shifted(lit, lifted):
        yield from (int(lit.value) + d for d in (1000, 2000, 3000))
    monkeypatch.setattr(oracle_mod, "fresh_literals", shifted)
    again = identify_injection_points(reverse_source, tmp_path, oracle=reverse_setup.oracle)
    assert [(p.kind, p.line, p.slot_index) for p in again] == \
        [(p.kind, p.line, p.slot_index) for p in reverse_setup.points]


def test_three_literals_three_lines(tmp_path):
    src = SourceProgram.from_dir(PROGRAMS / "three_lits")
    base = build_oracle(src, tmp_path / "base")
    pts = identify_injection_points(src, tmp_path / "pts", oracle=base)
    assert [(p.kind, p.slot_index, p.original_literal[0]) for p in pts] == [
        ("Input", 0, 7), ("Input", 1, 9), ("OutputBaseline", 0, 23)]
    assert len({p.line for p in pts}) == 3
    # each literal on its own moves exactly its own line
    for k, (p, new) in enumerate(zip(pts, ("70", "90", "230"))):
        mutated = build_oracle(_mutant(src, {k: new}), tmp_path / f"m{k}")
        assert lifted_diff_lines(base.lifted_text, mutated.lifted_text) == [p.line]


def test_entry_without_literals(tmp_path):
    src = SourceProgram.from_dir(PROGRAMS / "no_args")
    with pytest.raises(NoEntryConstants):
        identify_injection_points(src, tmp_path)


@given(st.sampled_from(sorted(INT_BITS)), st.integers())
def test_fresh_literals_are_new_and_in_range(prim, seed):
    bits = INT_BITS[prim]
    lo, hi = (-(1 << (bits - 1)), (1 << (bits - 1)) - 1) if prim.startswith("i") else (0, (1 << bits) - 1)
    value = lo + seed % (hi - lo + 1)
    lit = Literal(str(value), 0, 1, value, prim, "input", 0)
    gen = fresh_literals(lit, "")
    got = [next(gen) for _ in range(3)]
    assert value not in got and len(set(got)) == 3
    assert all(lo <= v <= hi for v in got)
    # the carried wasm constant is the same bit pattern
    carrier = 64 if bits == 64 else 32
    for v in got:
        c = wasm_const(v, prim)
        assert -(1 << (carrier - 1)) <= c < (1 << (carrier - 1))
        assert (c - v) % (1 << carrier) == 0
