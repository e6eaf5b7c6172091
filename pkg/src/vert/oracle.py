"""Oracle construction: source -> wasm -> lifted Rust, plus injection points."""

from __future__ import annotations

import difflib
import hashlib
import re
import shlex
from dataclasses import dataclass
from pathlib import Path

from .cleaning import clean_source
from .config import ToolConfig
from .errors import AmbiguousDiff, LiftFailed, OracleBuildFailed, ToolchainMissing, UnsupportedType
from .source import INT_BITS, Literal, SourceProgram, entry_literals
from .toolchain import run, tool_version, which
from .wasm.decode import I32, I64, DecodeError, decode
from .wasm.lift import LiftError, lift_module, literal

# headers that exist for a freestanding wasm32 target
FREESTANDING = {"stdint.h", "stdbool.h", "limits.h", "stddef.h", "stdarg.h", "float.h",
                "cstdint", "climits", "cstddef", "cstdarg", "cfloat"}

# weak fallbacks for the handful of libc routines benchmark programs
# (and clang itself, for aggregate initialisation) tend to need
C_PRELUDE = r"""
typedef __SIZE_TYPE__ __vert_size_t;
__attribute__((weak)) void *memset(void *d, int c, __vert_size_t n) {
  unsigned char *p = (unsigned char *)d; while (n--) *p++ = (unsigned char)c; return d; }
__attribute__((weak)) void *memcpy(void *d, const void *s, __vert_size_t n) {
  unsigned char *p = (unsigned char *)d; const unsigned char *q = (const unsigned char *)s;
  while (n--) *p++ = *q++; return d; }
__attribute__((weak)) void *memmove(void *d, const void *s, __vert_size_t n) {
  unsigned char *p = (unsigned char *)d; const unsigned char *q = (const unsigned char *)s;
  if (p < q) { while (n--) *p++ = *q++; } else { p += n; q += n; while (n--) *--p = *--q; } return d; }
__attribute__((weak)) int memcmp(const void *a, const void *b, __vert_size_t n) {
  const unsigned char *p = (const unsigned char *)a, *q = (const unsigned char *)b;
  for (; n; n--, p++, q++) if (*p != *q) return *p - *q; return 0; }
__attribute__((weak)) __vert_size_t strlen(const char *s) { __vert_size_t n = 0; while (s[n]) n++; return n; }
__attribute__((weak)) int strcmp(const char *a, const char *b) {
  while (*a && *a == *b) { a++; b++; } return (unsigned char)*a - (unsigned char)*b; }
__attribute__((weak)) int abs(int x) { return x < 0 ? -x : x; }
__attribute__((weak)) long labs(long x) { return x < 0 ? -x : x; }
__attribute__((weak)) long long llabs(long long x) { return x < 0 ? -x : x; }
__attribute__((weak)) int isdigit(int c) { return c >= '0' && c <= '9'; }
__attribute__((weak)) int isalpha(int c) { return (c | 32) >= 'a' && (c | 32) <= 'z'; }
__attribute__((weak)) int isspace(int c) { return c == ' ' || (c >= 9 && c <= 13); }
__attribute__((weak)) int toupper(int c) { return c >= 'a' && c <= 'z' ? c - 32 : c; }
__attribute__((weak)) int tolower(int c) { return c >= 'A' && c <= 'Z' ? c + 32 : c; }
"""


@dataclass
class OracleModule:
    lifted_text: str
    entry_fn_symbol: str
    build_fingerprint: str


@dataclass(frozen=True)
class InjectionPoint:
    kind: str  # "Input" | "OutputBaseline"
    line: int  # 0-based index into lifted_text.splitlines()
    original_literal: tuple  # (value, primitive kind)
    slot_index: int
    token: str = ""  # the literal as it appears on the line


def _keep_include(line: str) -> bool:
    m = re.match(r"\s*#\s*include\s*[<\"]([^>\"]+)[>\"]", line)
    return bool(m) and m.group(1) in FREESTANDING


def translation_unit(source: SourceProgram, entry_call: str | None = None) -> str:
    """Cleaned source (no main, no hosted includes) followed by the entry call."""
    entry = source.entry_call if entry_call is None else entry_call
    kept_includes = [l for l in source.text.splitlines() if _keep_include(l)]
    _, cleaned = clean_source(source.text, source.language)
    if source.language == "CPP":
        entry = 'extern "C" {\n' + entry + "\n}\n"
        prelude = 'extern "C" {\n' + C_PRELUDE + "}\n"
    else:
        prelude = C_PRELUDE
    return "\n".join(kept_includes) + "\n" + prelude + "\n" + cleaned + "\n" + entry + "\n"


def compile_to_wasm(source: SourceProgram, workspace: str | Path, tools: ToolConfig | None = None,
                    entry_call: str | None = None, timeout: float = 120.0, tag: str = "oracle") -> bytes:
    tools = tools or ToolConfig()
    ws = Path(workspace)
    ws.mkdir(parents=True, exist_ok=True)
    if source.language == "Go":
        which(tools.go)
        raise ToolchainMissing("Go oracle builds need a wasm-capable Go toolchain and a host-import-free "
                               "module; the built-in lifter does not support Go runtime imports")
    compiler = tools.clang if source.language == "C" else tools.clangxx
    ext = ".c" if source.language == "C" else ".cpp"
    src_path = ws / f"{tag}{ext}"
    out_path = ws / f"{tag}.wasm"
    src_path.write_text(translation_unit(source, entry_call))
    argv = [compiler] + shlex.split(tools.oracle_cflags)
    if source.language == "CPP":
        argv += ["-fno-exceptions", "-fno-rtti"]
    argv += ["-o", str(out_path), str(src_path)]
    r = run(argv, timeout=timeout)
    if not r.ok:
        raise OracleBuildFailed(f"{compiler} failed" + (" (timeout)" if r.timed_out else ""), r.stderr)
    data = out_path.read_bytes()
    if not data:
        raise OracleBuildFailed("compiler produced an empty module")
    return data


def _fingerprint(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def lift_to_target(module: bytes, entry_fn_symbol: str = "", tools: ToolConfig | None = None,
                   workspace: str | Path | None = None, timeout: float = 120.0,
                   fingerprint_extra: str = "") -> OracleModule:
    tools = tools or ToolConfig()
    if tools.lifter:
        if workspace is None:
            raise LiftFailed("external lifter needs a workspace")
        ws = Path(workspace)
        wasm_path, out_path = ws / "lift-in.wasm", ws / "lift-out.rs"
        wasm_path.write_bytes(module)
        argv = [a.format(wasm=wasm_path, out=out_path) for a in shlex.split(tools.lifter)]
        r = run(argv, timeout=timeout)
        if not r.ok or not out_path.exists():
            raise LiftFailed("external lifter failed", r.stderr)
        text = out_path.read_text()
        lifter_id = tools.lifter
    else:
        try:
            text = lift_module(decode(module))
        except (DecodeError, LiftError) as e:
            raise LiftFailed(str(e)) from e
        lifter_id = "builtin"
    return OracleModule(text, entry_fn_symbol,
                        _fingerprint(hashlib.sha256(module).hexdigest(), lifter_id, fingerprint_extra))


def build_oracle(source: SourceProgram, workspace: str | Path, tools: ToolConfig | None = None,
                 timeout: float = 120.0) -> OracleModule:
    tools = tools or ToolConfig()
    wasm = compile_to_wasm(source, workspace, tools, timeout=timeout)
    compiler = tools.clang if source.language == "C" else tools.clangxx
    extra = _fingerprint(source.text, source.entry_call, tool_version(compiler))
    return lift_to_target(wasm, source.entry_fn_name, tools, workspace, timeout, extra)


# -- mutation-guided identification ---------------------------------------

def _carrier(prim: str) -> int:
    return I64 if prim in ("i64", "u64") else I32


def wasm_const(value: int, prim: str) -> int:
    """The signed wasm constant that carries ``value`` of kind ``prim``."""
    bits = 64 if _carrier(prim) == I64 else 32
    v = int(value) & ((1 << bits) - 1)
    return v - (1 << bits) if v >> (bits - 1) else v


def _wrap(value: int, prim: str) -> int:
    if prim == "bool":
        return value & 1
    bits = INT_BITS.get(prim, 32 if prim == "char" else 32)
    if prim == "char":
        bits = 8
    v = value & ((1 << bits) - 1)
    signed = prim.startswith("i") or prim == "char"
    return v - (1 << bits) if signed and v >> (bits - 1) else v


def fresh_literals(lit: Literal, lifted: str):
    """Candidate replacement values: complement first, then L+1, L+2, ... wrapping."""
    if not isinstance(lit.value, (int, bool)) or lit.prim == "str":
        raise UnsupportedType(f"cannot inject literal {lit.text!r} of kind {lit.prim}")
    value = int(lit.value)
    seen = {value}
    cand = _wrap(~value, lit.prim)
    step = 0
    while True:
        if cand not in seen:
            seen.add(cand)
            token = literal(wasm_const(cand, lit.prim), _carrier(lit.prim))
            if not re.search(r"(?<![\w.])" + re.escape(token) + r"(?![\w.])", lifted) or step > 64:
                yield cand
        step += 1
        cand = _wrap(value + step, lit.prim)
        if step > 1 << 20:
            return


def render_c_literal(value: int, prim: str) -> str:
    if prim == "bool":
        return "1" if value else "0"
    if prim in ("u32", "u64"):
        return f"{value}u" + ("LL" if prim == "u64" else "")
    if prim == "i64":
        return f"({value + 1}LL - 1)" if value == -(1 << 63) else f"{value}LL"
    if value == -(1 << 31):
        return "(-2147483647 - 1)"
    return f"({value})" if value < 0 else str(value)


def _changed_lines(a: str, b: str) -> list[int]:
    """0-based indices (in a) of lines that differ, from a line-level diff."""
    al, bl = a.splitlines(), b.splitlines()
    out = []
    sm = difflib.SequenceMatcher(None, al, bl, autojunk=False)
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag == "equal":
            continue
        if tag == "replace" and i2 - i1 == j2 - j1:
            out.extend(range(i1, i2))
        else:
            # insertions/deletions shift the text: mark the span (and flag it)
            out.extend(range(i1, max(i2, i1 + 1)))
            out.append(-1)
    return out


def identify_injection_points(source: SourceProgram, workspace: str | Path, tools: ToolConfig | None = None,
                              timeout: float = 120.0, oracle: OracleModule | None = None,
                              attempts: int = 2) -> list[InjectionPoint]:
    tools = tools or ToolConfig()
    ws = Path(workspace)
    lits = entry_literals(source)
    if oracle is None:
        oracle = build_oracle(source, ws, tools, timeout)
    base = oracle.lifted_text
    base_lines = base.splitlines()
    points = []
    for n, lit in enumerate(lits):
        found = None
        last_changed: list[int] = []
        gen = fresh_literals(lit, base)
        for attempt in range(attempts):
            try:
                new_value = next(gen)
            except StopIteration:
                break
            mutated_entry = source.entry_call[:lit.start] + render_c_literal(new_value, lit.prim) + \
                source.entry_call[lit.end:]
            wasm = compile_to_wasm(source, ws, tools, entry_call=mutated_entry, timeout=timeout,
                                   tag=f"mutant-{n}-{attempt}")
            mutated = lift_to_target(wasm, source.entry_fn_name, tools, ws, timeout).lifted_text
            changed = _changed_lines(base, mutated)
            last_changed = changed
            if len(changed) == 1 and changed[0] >= 0:
                found = changed[0]
                break
        if found is None:
            raise AmbiguousDiff(f"literal {lit.text!r}: {len([c for c in last_changed if c >= 0])} changed lines")
        token = literal(wasm_const(int(lit.value), lit.prim), _carrier(lit.prim))
        if token not in base_lines[found]:
            raise AmbiguousDiff(f"literal {lit.text!r} not visible on its changed line")
        kind = "Input" if lit.role == "input" else "OutputBaseline"
        points.append(InjectionPoint(kind, found, (lit.value, lit.prim), lit.slot, token))
    return points


def lifted_diff_lines(a: str, b: str) -> list[int]:
    return [i for i in _changed_lines(a, b) if i >= 0]
