import json
import time
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from vert.config import ToolConfig
from vert.diagnostics import (CompileResult, Diagnostic, ErrorCategory, LabeledSpan, Level, RepairAction, Span,
                              apply_repairs, classify, error_count, parse_diagnostics, plan_repairs, repair_loop,
                              span_offsets)
from vert.errors import NoDiagnostics, OverlappingActions
from vert.pipeline import rustc_check

from conftest import FIXTURES, needs_rust

REPAIR = FIXTURES / "repair"
KINDS = ("delimiter", "borrow", "mutability")


def _diag(message, code=None, label="", suggestions=()):
    span = Span(1, 1, 2)
    return Diagnostic(code, Level.Error, message, span, list(suggestions),
                      spans=[LabeledSpan(span, label, True, "a.rs")], file_name="a.rs")


def _old_style_borrow_record() -> str:
    # older compilers only quote the replacement in the help message
    span = {"file_name": "a.rs", "byte_start": 0, "byte_end": 3, "line_start": 8, "line_end": 8,
            "column_start": 20, "column_end": 23, "is_primary": True, "label": "expected `&i32`, found `i32`",
            "suggested_replacement": None, "suggestion_applicability": None}
    rec = {"message": "mismatched types", "code": {"code": "E0308", "explanation": None}, "level": "error",
           "spans": [span], "rendered": "error[E0308]: mismatched types\n",
           "children": [{"message": "consider borrowing here: `&num`", "code": None, "level": "help",
                         "spans": [dict(span, is_primary=True, label=None)], "children": [], "rendered": None}]}
    return json.dumps(rec) + "\n"


# -- parsing -----------------------------------------------------------------

def test_quoted_borrow_suggestion_becomes_replacement():
    ds = parse_diagnostics(_old_style_borrow_record(), returncode=1)
    assert len(ds) == 1
    d = ds[0]
    assert d.code == "E0308"
    assert [s.replacement for s in d.suggestions] == ["&num"]
    assert d.suggestions[0].span == Span(8, 20, 23)


def test_structured_borrow_suggestion_from_captured_output():
    ds = parse_diagnostics((REPAIR / "borrow.json").read_bytes(), returncode=1)
    assert [d.code for d in ds] == ["E0308"]
    # current compilers insert '&' in front of the argument
    assert [(s.span, s.replacement) for s in ds[0].suggestions] == [(Span(8, 20, 20), "&")]


def test_empty_stream_on_success():
    assert parse_diagnostics(b"", returncode=0) == []


def test_failure_without_records_raises():
    with pytest.raises(NoDiagnostics):
        parse_diagnostics("error: linker not found\n", returncode=1)


def test_garbage_lines_are_skipped_and_counted():
    ds = parse_diagnostics("not json\n" + (REPAIR / "delimiter.json").read_text(), returncode=1)
    assert len(ds) == 1 and ds.skipped == 1


@needs_rust
def test_undeclared_identifier_gives_one_error(tmp_path):
    text = (FIXTURES / "compile" / "undeclared.rs").read_text()
    r = rustc_check(ToolConfig(), tmp_path, 60)(text)
    assert not r.ok
    ds = parse_diagnostics(r.output, r.returncode)
    errors = [d for d in ds if d.level is Level.Error]
    assert len(errors) == 1
    assert errors[0].code == "E0425"
    assert error_count(r.output) == 1


# -- classification ----------------------------------------------------------

def test_classify_examples():
    assert classify(_diag("mismatched closing delimiter: `]`")) is ErrorCategory.Syntax
    assert classify(_diag("mismatched types", "E0308", "expected `&i32`, found `i32`")) is ErrorCategory.Typing
    assert classify(_diag("cannot assign to immutable argument `x`", "E0384")) is ErrorCategory.DomainSpecific


def test_classify_captured_fixtures():
    got = {k: classify(parse_diagnostics((REPAIR / f"{k}.json").read_text())[0]) for k in KINDS}
    assert got == {"delimiter": ErrorCategory.Syntax, "borrow": ErrorCategory.Typing,
                   "mutability": ErrorCategory.DomainSpecific}


@settings(max_examples=300)
@given(st.text(max_size=60), st.one_of(st.none(), st.from_regex(r"E0[0-9]{3}", fullmatch=True)), st.text(max_size=30))
def test_classify_is_total_and_deterministic(message, code, label):
    d = _diag(message, code, label)
    a, b = classify(d), classify(d)
    assert a is b and isinstance(a, ErrorCategory)


# -- planning ------------------------------------------------------------------

def _plan(kind):
    text = (REPAIR / f"{kind}.rs").read_text()
    return text, plan_repairs(parse_diagnostics((REPAIR / f"{kind}.json").read_text()), text)


def test_plan_delimiter_replaces_closer():
    text, actions = _plan("delimiter")
    assert actions == [RepairAction(Span(10, 1, 2), "}", "delimiter")]
    assert text.splitlines()[0].rstrip().endswith("{")


def test_plan_borrow_inserts_ampersand():
    text, actions = _plan("borrow")
    assert len(actions) == 1
    out = apply_repairs(text, actions)
    assert out.splitlines()[7].strip() == "map.insert(&num, index as i32);"
    assert len(out) == len(text) + 1


def test_plan_quoted_borrow_replaces_argument():
    text = (REPAIR / "borrow.rs").read_text()
    actions = plan_repairs(parse_diagnostics(_old_style_borrow_record()), text)
    assert actions == [RepairAction(Span(8, 20, 23), "&num", "E0308")]
    assert apply_repairs(text, actions) == apply_repairs(text, _plan("borrow")[1])


def test_plan_mutability_adds_mut():
    text, actions = _plan("mutability")
    assert len(actions) == 1
    assert apply_repairs(text, actions).splitlines()[0] == "pub fn reverse(mut x: i32) -> i32 {"


def test_unclosed_delimiter_at_eof_appends_closer():
    text = "pub fn f() -> i32 {\n    1\n"
    d = Diagnostic(None, Level.Error, "this file contains an unclosed delimiter", Span(3, 1, 1),
                   spans=[LabeledSpan(Span(1, 19, 20), "unclosed delimiter", False, "a.rs"),
                          LabeledSpan(Span(3, 1, 1), "", True, "a.rs")])
    assert apply_repairs(text, plan_repairs([d], text)) == text + "}"


def test_overlapping_actions_keep_the_first():
    text = "abcdef"
    a = Diagnostic("E0001", Level.Error, "m", Span(1, 1, 3))
    a.suggestions = [_sugg(Span(1, 1, 3), "X")]
    b = Diagnostic("E0002", Level.Error, "m", Span(1, 2, 4))
    b.suggestions = [_sugg(Span(1, 2, 4), "Y")]
    assert [x.replacement for x in plan_repairs([a, b], text)] == ["X"]
    with pytest.raises(OverlappingActions):
        apply_repairs(text, [RepairAction(Span(1, 1, 3), "X", "t"), RepairAction(Span(1, 2, 4), "Y", "t")])


def _sugg(span, rep):
    from vert.diagnostics import Suggestion
    return Suggestion(span, rep, "MachineApplicable")


def test_placeholder_suggestions_are_ignored():
    from vert.diagnostics import Suggestion
    d = Diagnostic("E0061", Level.Error, "m", Span(1, 1, 2),
                   [Suggestion(Span(1, 1, 2), "/* value */", "HasPlaceholders")])
    assert plan_repairs([d], "ab") == []


# -- applying ------------------------------------------------------------------

def test_single_char_replacement_preserves_length():
    assert len(apply_repairs("fn f() ]", [RepairAction(Span(1, 8, 9), "}", "t")])) == len("fn f() ]")


def _reference_splice(text, edits):
    """Left-to-right string builder over offsets in the original text."""
    out, pos = [], 0
    for s, e, rep in sorted(edits):
        out.append(text[pos:s])
        out.append(rep)
        pos = e
    out.append(text[pos:])
    return "".join(out)


def _to_span(text, s, e):
    line = text.count("\n", 0, s) + 1
    ls = text.rfind("\n", 0, s) + 1
    le_line = text.count("\n", 0, e) + 1
    le = text.rfind("\n", 0, e) + 1
    return Span(line, s - ls + 1, e - le + 1, None if le_line == line else le_line)


@st.composite
def edit_sets(draw, max_edits=100, single_char=False):
    text = draw(st.text(alphabet="ab{}()\n ;", min_size=1, max_size=300))
    n = len(text)
    starts = sorted(draw(st.sets(st.integers(0, n - 1), max_size=min(max_edits, n))))
    edits = []
    for k, s in enumerate(starts):
        limit = starts[k + 1] if k + 1 < len(starts) else n
        e = s + 1 if single_char else draw(st.integers(s, limit))
        if e > limit:
            continue
        rep = draw(st.text(alphabet="xyz{}\n", min_size=1 if single_char else 0, max_size=1 if single_char else 4))
        edits.append((s, e, rep))
    return text, edits


@settings(max_examples=200, deadline=None)
@given(edit_sets(single_char=True))
def test_random_single_char_edits_match_reference(case):
    text, edits = case
    actions = [RepairAction(_to_span(text, s, e), rep, "t") for s, e, rep in edits]
    assert apply_repairs(text, actions) == _reference_splice(text, edits)


@settings(max_examples=200, deadline=None)
@given(edit_sets(), st.randoms(use_true_random=False))
def test_apply_is_position_stable(case, rnd):
    text, edits = case
    actions = [RepairAction(_to_span(text, s, e), rep, "t") for s, e, rep in edits]
    assert [span_offsets(text, a.span)[:2] for a in actions] == [(s, e) for s, e, _ in edits]
    shuffled = list(actions)
    rnd.shuffle(shuffled)
    assert apply_repairs(text, shuffled) == _reference_splice(text, edits)


# -- the loop --------------------------------------------------------------------

class CountingCompiler:
    def __init__(self, inner):
        self.inner, self.errors = inner, []

    def __call__(self, text):
        r = self.inner(text)
        self.errors.append(0 if r.ok else error_count(r.output))
        return r


@needs_rust
@pytest.mark.parametrize("kind", KINDS)
def test_repair_loop_fixes_each_fixture_class(kind, tmp_path):
    text = (REPAIR / f"{kind}.rs").read_text()
    compiler = CountingCompiler(rustc_check(ToolConfig(), tmp_path, 60))
    out, ok, rounds = repair_loop(text, compiler, 5)
    assert ok and 1 <= rounds <= 2
    # error counts never go up between rounds
    assert all(b <= a for a, b in zip(compiler.errors, compiler.errors[1:]))


@needs_rust
def test_mutability_only_takes_one_round(tmp_path):
    _, ok, rounds = repair_loop((REPAIR / "mutability.rs").read_text(), rustc_check(ToolConfig(), tmp_path, 60))
    assert (ok, rounds) == (True, 1)


@needs_rust
def test_compiling_candidate_is_untouched(tmp_path):
    text = "pub fn f(x: i32) -> i32 {\n    x + 1\n}\n"
    assert repair_loop(text, rustc_check(ToolConfig(), tmp_path, 60)) == (text, True, 0)


@needs_rust
def test_three_independent_errors(tmp_path):
    text = (FIXTURES / "compile" / "three_errors.rs").read_text()
    first = rustc_check(ToolConfig(), tmp_path, 60)(text)
    assert error_count(first.output) == 3
    out, ok, rounds = repair_loop(text, rustc_check(ToolConfig(), tmp_path, 60))
    assert ok and rounds <= 3
    assert "mut x" in out and out.count("take(&num)") == 2


def test_loop_stops_when_nothing_applies():
    calls = []

    def compile(text):
        calls.append(text)
        return CompileResult(False, (REPAIR / "borrow.json").read_text().replace('"&"', "null"), 1)
    # no suggestion survives, so the loop gives up after one compile
    out, ok, rounds = repair_loop("x", compile, 5)
    assert (ok, rounds, len(calls)) == (False, 0, 1)


def test_max_rounds_validated():
    with pytest.raises(ValueError):
        repair_loop("x", lambda t: CompileResult(True, ""), 0)
