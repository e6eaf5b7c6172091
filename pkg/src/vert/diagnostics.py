"""Parse rustc JSON diagnostics, classify them and turn suggestions into edits."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Callable

from .errors import NoDiagnostics, OverlappingActions


class Level(enum.Enum):
    Error = "error"
    Warning = "warning"


class ErrorCategory(enum.Enum):
    Syntax = "Syntax"
    Typing = "Typing"
    DomainSpecific = "DomainSpecific"


@dataclass(frozen=True)
class Span:
    line: int
    col_start: int
    col_end: int
    line_end: int | None = None  # None means same as line

    @property
    def last_line(self) -> int:
        return self.line if self.line_end is None else self.line_end


@dataclass
class Suggestion:
    span: Span
    replacement: str
    applicability: str


@dataclass
class LabeledSpan:
    span: Span
    label: str
    primary: bool
    file_name: str


@dataclass
class Diagnostic:
    code: str | None
    level: Level
    message: str
    primary_span: Span
    suggestions: list[Suggestion] = field(default_factory=list)
    rendered: str = ""
    spans: list[LabeledSpan] = field(default_factory=list)
    file_name: str = ""


@dataclass(frozen=True)
class RepairAction:
    span: Span
    replacement: str
    origin: str


class Diagnostics(list):
    """A list of diagnostics that also remembers how many lines were skipped."""

    skipped: int = 0


# -- parsing -------------------------------------------------------------

_QUOTED = re.compile(r"[`'‘]([^`'’]+)[`'’]\s*$")


def _span(d: dict) -> Span:
    ls, le = d["line_start"], d["line_end"]
    return Span(ls, d["column_start"], d["column_end"], None if le == ls else le)


def _record_to_diag(rec: dict) -> Diagnostic | None:
    level = rec.get("level")
    msg = rec.get("message", "")
    if level not in ("error", "warning") or msg.startswith("aborting due to"):
        return None
    if level == "warning" and re.match(r"\d+ warnings? emitted", msg):
        return None
    spans = rec.get("spans") or []
    primary = next((s for s in spans if s.get("is_primary")), spans[0] if spans else None)
    file_name = primary["file_name"] if primary else ""
    pspan = _span(primary) if primary else Span(1, 1, 1)
    labeled = [LabeledSpan(_span(s), s.get("label") or "", bool(s.get("is_primary")), s["file_name"])
               for s in spans]
    suggestions: list[Suggestion] = []
    for s in spans:
        if s.get("suggested_replacement") is not None and s["file_name"] == file_name:
            suggestions.append(Suggestion(_span(s), s["suggested_replacement"],
                                          s.get("suggestion_applicability") or "Unspecified"))
    for child in rec.get("children") or []:
        cspans = [s for s in child.get("spans") or [] if s["file_name"] == file_name]
        got = False
        for s in cspans:
            if s.get("suggested_replacement") is not None:
                suggestions.append(Suggestion(_span(s), s["suggested_replacement"],
                                              s.get("suggestion_applicability") or "Unspecified"))
                got = True
        if not got and child.get("level") == "help":
            # older rustc: replacement only quoted in the help line
            m = _QUOTED.search(child.get("message", ""))
            if m and cspans:
                suggestions.append(Suggestion(_span(cspans[0]), m.group(1), "Quoted"))
            elif m and primary is not None and child.get("message", "").startswith("consider borrowing"):
                suggestions.append(Suggestion(pspan, m.group(1), "Quoted"))
    code = rec.get("code")
    return Diagnostic(
        code=code.get("code") if isinstance(code, dict) else code,
        level=Level(level), message=msg, primary_span=pspan, suggestions=suggestions,
        rendered=rec.get("rendered") or "", spans=labeled, file_name=file_name,
    )


def parse_diagnostics(output: bytes | str, returncode: int | None = None) -> Diagnostics:
    """One Diagnostic per top-level error/warning record of a JSON-lines stream."""
    if isinstance(output, bytes):
        output = output.decode("utf-8", "replace")
    out = Diagnostics()
    for line in output.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            out.skipped += 1
            continue
        if not isinstance(rec, dict) or "message" not in rec:
            out.skipped += 1
            continue
        d = _record_to_diag(rec)
        if d is not None:
            out.append(d)
    if returncode not in (None, 0) and not any(d.level is Level.Error for d in out):
        raise NoDiagnostics("compiler failed without structured diagnostics", output)
    return out


# -- classification ------------------------------------------------------

_TYPING_CODES = {"E0308", "E0277", "E0369", "E0053", "E0061", "E0605", "E0606", "E0614", "E0600", "E0604"}
_SYNTAX_PATTERNS = re.compile(
    r"delimiter|^expected one of|^expected (?:expression|item|identifier|pattern|statement|type)|"
    r"^unexpected (?:token|end of|closing)|^unterminated|^unknown start of token|^missing (?:fn|struct)|"
    r"^this file contains an unclosed",
)
_EXPECTED_FOUND = re.compile(r"expected .+,? found ")


def classify(d: Diagnostic) -> ErrorCategory:
    if d.code is None and _SYNTAX_PATTERNS.search(d.message):
        return ErrorCategory.Syntax
    if d.code in _TYPING_CODES or _EXPECTED_FOUND.search(d.message) or \
            any(_EXPECTED_FOUND.search(s.label) for s in d.spans if s.primary):
        return ErrorCategory.Typing
    return ErrorCategory.DomainSpecific


# -- planning ------------------------------------------------------------

_CLOSER = {"{": "}", "(": ")", "[": "]"}


def _line_offsets(text: str) -> list[int]:
    offs = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            offs.append(i + 1)
    return offs


def span_offsets(text: str, span: Span, _offs: list[int] | None = None) -> tuple[int, int]:
    """Character offsets [start, end) of a 1-based line/column span."""
    offs = _offs or _line_offsets(text)
    if span.line < 1 or span.last_line > len(offs):
        raise ValueError(f"span {span} outside text")
    start = offs[span.line - 1] + span.col_start - 1
    end = offs[span.last_line - 1] + span.col_end - 1
    if not 0 <= start <= end <= len(text):
        raise ValueError(f"span {span} outside text")
    return start, end


def _char_at(text: str, span: Span) -> str:
    s, e = span_offsets(text, span)
    return text[s:e]


def _delimiter_action(d: Diagnostic, text: str) -> RepairAction | None:
    closer = next((s for s in d.spans if "mismatched closing delimiter" in s.label), None)
    opener = next((s for s in d.spans if "unclosed delimiter" in s.label and s is not closer), None)
    if opener is None:
        return None
    try:
        open_ch = _char_at(text, opener.span)
    except ValueError:
        return None
    want = _CLOSER.get(open_ch)
    if want is None:
        return None
    if closer is not None:
        return RepairAction(closer.span, want, "delimiter")
    if d.message.startswith("this file contains an unclosed delimiter"):
        # nothing closes the opener: append the closer at the end of the text
        offs = _line_offsets(text)
        last = len(offs)
        col = len(text) - offs[-1] + 1
        return RepairAction(Span(last, col, col), ("\n" if not text.endswith("\n") and col > 1 else "") + want,
                            "delimiter")
    return None


def _within(text: str, span: Span) -> bool:
    try:
        span_offsets(text, span)
        return True
    except ValueError:
        return False


def _actions_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Edits conflict if they intersect or share a start (order would be ambiguous)."""
    return (a[0] < b[1] and b[0] < a[1]) or a[0] == b[0]


def plan_repairs(diags: list[Diagnostic], text: str) -> list[RepairAction]:
    candidates: list[RepairAction] = []
    for d in diags:
        if d.level is not Level.Error:
            continue
        cat = classify(d)
        action = None
        if cat is ErrorCategory.Syntax:
            action = _delimiter_action(d, text)
        else:
            for s in d.suggestions:
                if s.applicability == "HasPlaceholders" or not _within(text, s.span):
                    continue
                action = RepairAction(s.span, s.replacement, d.code or cat.value)
                break  # first suggestion only
        if action is not None and _within(text, action.span):
            candidates.append(action)
    offs = _line_offsets(text)
    ordered = sorted(candidates, key=lambda a: span_offsets(text, a.span, offs))
    kept: list[RepairAction] = []
    kept_off: list[tuple[int, int]] = []
    for a in ordered:
        o = span_offsets(text, a.span, offs)
        if any(_actions_overlap(o, k) for k in kept_off):
            continue
        kept.append(a)
        kept_off.append(o)
    return kept


def apply_repairs(text: str, actions: list[RepairAction]) -> str:
    offs = _line_offsets(text)
    located = [(span_offsets(text, a.span, offs), a) for a in actions]
    located.sort(key=lambda t: t[0])
    for (x, _), (y, _) in zip(located, located[1:]):
        if _actions_overlap(x, y):
            raise OverlappingActions(f"overlapping repair spans {x} and {y}")
    for (s, e), a in reversed(located):
        text = text[:s] + a.replacement + text[e:]
    return text


# -- loop ----------------------------------------------------------------

@dataclass
class CompileResult:
    ok: bool
    output: str
    returncode: int | None = None


def repair_loop(candidate: str, compile: Callable[[str], CompileResult],
                max_rounds: int = 5) -> tuple[str, bool, int]:
    """compile -> parse -> plan -> apply, until it compiles or nothing applies."""
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    text = candidate
    result = compile(text)
    rounds = 0
    while not result.ok and rounds < max_rounds:
        try:
            diags = parse_diagnostics(result.output, result.returncode)
        except NoDiagnostics:
            break
        actions = plan_repairs(diags, text)
        if not actions:
            break
        text = apply_repairs(text, actions)
        rounds += 1
        result = compile(text)
    return text, result.ok, rounds


def error_count(output: str) -> int:
    return sum(1 for d in parse_diagnostics(output) if d.level is Level.Error)
