"""Source programs, their entry calls, and the literals inside them."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .cleaning import clean_and_split, normalize_language
from .errors import NoEntryConstants, UnsupportedType

# primitive kinds shared with the harness layer
INT_BITS = {"i8": 8, "u8": 8, "i16": 16, "u16": 16, "i32": 32, "u32": 32, "i64": 64, "u64": 64}
SCALARS = set(INT_BITS) | {"bool", "char", "str"}

_C_TYPES = [
    (r"unsigned\s+long\s+long(?:\s+int)?|uint64_t|size_t64", "u64"),
    (r"(?:signed\s+)?long\s+long(?:\s+int)?|int64_t", "i64"),
    (r"unsigned\s+long(?:\s+int)?|uint32_t|size_t|unsigned(?:\s+int)?", "u32"),
    (r"(?:signed\s+)?long(?:\s+int)?|int32_t|(?:signed\s+)?int|signed", "i32"),
    (r"unsigned\s+short(?:\s+int)?|uint16_t", "u16"),
    (r"(?:signed\s+)?short(?:\s+int)?|int16_t", "i16"),
    (r"unsigned\s+char|uint8_t", "u8"),
    (r"signed\s+char|int8_t", "i8"),
    (r"char", "char"),
    (r"_Bool|bool", "bool"),
]
_GO_TYPES = {"int": "i64", "int64": "i64", "int32": "i32", "int16": "i16", "int8": "i8", "uint": "u64",
             "uint64": "u64", "uint32": "u32", "uint16": "u16", "uint8": "u8", "byte": "u8", "rune": "i32",
             "bool": "bool", "string": "str"}


def c_type_to_prim(ctype: str) -> str:
    t = re.sub(r"\b(?:const|volatile|static|inline|extern|register)\b", " ", ctype).strip()
    t = re.sub(r"\s+", " ", t)
    if re.fullmatch(r"(?:const )?char ?\*|std::string|string|const char ?\*", t):
        return "str"
    for pat, prim in _C_TYPES:
        if re.fullmatch(pat, t):
            return prim
    raise UnsupportedType(f"unsupported source type: {ctype!r}")


@dataclass
class Signature:
    name: str
    params: list[str]  # primitive kinds
    ret: str
    param_names: list[str] = field(default_factory=list)


def parse_signature(source_text: str, language: str, name: str) -> Signature:
    language = normalize_language(language)
    for unit in clean_and_split(source_text, language):
        if unit.name != name:
            continue
        head = unit.text[:unit.text.index("{")]
        if language == "Go":
            m = re.match(r"\s*func\s+\w+\s*\(([^)]*)\)\s*([\w\[\]]*)", head)
            params, names = [], []
            for p in [p.strip() for p in m.group(1).split(",") if p.strip()]:
                bits = p.split()
                names.append(bits[0])
                params.append(_GO_TYPES.get(bits[-1], bits[-1]))
            # Go allows "a, b int": propagate trailing types backwards
            for i in range(len(params) - 2, -1, -1):
                if params[i] not in SCALARS and len(m.group(1).split(",")[i].split()) == 1:
                    params[i] = params[i + 1]
            ret = _GO_TYPES.get(m.group(2), m.group(2) or "void")
            return Signature(name, params, ret, names)
        m = re.search(r"([\w\s\*:&<>]+?)\b" + re.escape(name) + r"\s*\(([^)]*)\)", head, re.S)
        if not m:
            break
        ret = m.group(1).strip()
        params, names = [], []
        raw = m.group(2).strip()
        if raw and raw != "void":
            for p in raw.split(","):
                p = p.strip()
                pm = re.match(r"(.*?)([A-Za-z_]\w*)\s*$", p, re.S)
                if pm and pm.group(1).strip():
                    ptype, pname = pm.group(1), pm.group(2)
                else:
                    ptype, pname = p, ""
                params.append(c_type_to_prim(ptype))
                names.append(pname)
        return Signature(name, params, "void" if ret.split()[-1] == "void" else c_type_to_prim(ret), names)
    raise ValueError(f"function {name!r} not found in source")


@dataclass
class Literal:
    """A literal in the entry call: text span, value and primitive type."""

    text: str
    start: int
    end: int
    value: int | str | bool
    prim: str
    role: str  # "input" | "output"
    slot: int


@dataclass
class SourceProgram:
    language: str
    text: str
    entry_call: str
    target_fn_name: str
    program_id: str = "program"

    def __post_init__(self):
        self.language = normalize_language(self.language)
        if self.target_fn_name not in self.text:
            raise ValueError("target function does not occur in the source text")
        if self.target_fn_name not in self.entry_call:
            raise ValueError("target function does not occur in the entry call")

    @property
    def entry_fn_name(self) -> str:
        units = clean_and_split(self.entry_call, self.language)
        if not units:
            raise ValueError("entry call defines no function")
        return units[0].name

    def signature(self) -> Signature:
        return parse_signature(self.text, self.language, self.target_fn_name)

    @classmethod
    def from_dir(cls, path: str | Path, language: str | None = None) -> "SourceProgram":
        """Load ``<dir>/source.<ext>`` + ``<dir>/entry.<ext>`` (+ optional ``target`` file)."""
        path = Path(path)
        src = next(iter(sorted(p for p in path.glob("source.*"))), None)
        entry = next(iter(sorted(p for p in path.glob("entry.*"))), None)
        if src is None or entry is None:
            raise FileNotFoundError(f"{path}: needs source.* and entry.* files")
        lang = language or {".c": "C", ".cpp": "CPP", ".cc": "CPP", ".go": "Go"}.get(src.suffix, "C")
        entry_text = entry.read_text()
        target_file = path / "target"
        if target_file.exists():
            target = target_file.read_text().strip()
        else:
            target = guess_target(src.read_text(), entry_text, lang)
        return cls(lang, src.read_text(), entry_text, target, program_id=path.name)


def guess_target(source_text: str, entry_call: str, language: str) -> str:
    """The first function of the source that the entry call invokes."""
    names = [u.name for u in clean_and_split(source_text, language)]
    entry_names = {u.name for u in clean_and_split(entry_call, language)}
    for n in names:
        if n not in entry_names and n != "main" and re.search(r"\b" + re.escape(n) + r"\s*\(", entry_call):
            return n
    raise ValueError("cannot determine the target function from the entry call")


# -- literal enumeration -------------------------------------------------

_LIT = re.compile(
    r"""(?P<str>"(?:[^"\\\n]|\\.)*")|(?P<chr>'(?:[^'\\\n]|\\.)')|"""
    r"""(?P<num>-?\s*(?:0[xX][0-9a-fA-F]+|\d+)(?:[uU]?[lL]{0,2}|[lL]{1,2}[uU]?)?)\b|(?P<bool>\btrue\b|\bfalse\b)"""
)


def _mask_comments(text: str) -> str:
    def blank(m):
        return re.sub(r"[^\n]", " ", m.group(0))
    return re.sub(r"//[^\n]*|/\*.*?\*/", blank, text, flags=re.S)


def _parse_literal(kind: str, raw: str):
    if kind == "str":
        return bytes(raw[1:-1], "utf-8").decode("unicode_escape")
    if kind == "chr":
        return ord(bytes(raw[1:-1], "utf-8").decode("unicode_escape"))
    if kind == "bool":
        return raw == "true"
    digits = re.sub(r"[uUlL]+$", "", raw.replace(" ", ""))
    sign = -1 if digits.startswith("-") else 1
    digits = digits.lstrip("-")
    if digits.lower().startswith("0x"):
        return sign * int(digits, 16)
    if len(digits) > 1 and digits.startswith("0"):
        return sign * int(digits, 8)
    return sign * int(digits)


def _call_args(text: str, open_paren: int) -> list[tuple[int, int]]:
    """Spans of the top-level comma separated arguments of a call."""
    depth = 0
    args = []
    start = open_paren + 1
    i = open_paren
    while i < len(text):
        c = text[i]
        if c in "\"'":
            j = i + 1
            while j < len(text) and text[j] != c:
                j += 2 if text[j] == "\\" else 1
            i = j
        elif c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
            if depth == 0:
                if text[start:i].strip():
                    args.append((start, i))
                return args
        elif c == "," and depth == 1:
            args.append((start, i))
            start = i + 1
        i += 1
    raise ValueError("unbalanced call in entry call")


def entry_literals(source: SourceProgram) -> list[Literal]:
    """Literal inputs (call order) followed by the expected-output literal."""
    text = _mask_comments(source.entry_call)
    sig = source.signature()
    call = re.search(r"\b" + re.escape(source.target_fn_name) + r"\s*\(", text)
    if call is None:
        raise ValueError("entry call does not call the target function")
    out: list[Literal] = []
    for idx, (s, e) in enumerate(_call_args(text, call.end() - 1)):
        arg = text[s:e]
        m = _LIT.fullmatch(arg.strip())
        if not m:
            continue
        lead = len(arg) - len(arg.lstrip())
        kind = m.lastgroup
        prim = sig.params[idx] if idx < len(sig.params) else "i32"
        raw = m.group(0)
        # slot is the parameter position, so it lines up with the candidate's arguments
        out.append(Literal(raw, s + lead, s + lead + len(raw), _parse_literal(kind, raw), prim, "input", idx))
    # expected output: a literal compared with == or != outside the call
    body = text[call.start():]
    for m in re.finditer(r"(==|!=)\s*", body):
        lm = _LIT.match(body, m.end())
        if lm and lm.group(0).strip():
            s = call.start() + lm.start()
            raw = lm.group(0)
            out.append(Literal(raw, s, s + len(raw), _parse_literal(lm.lastgroup, raw), sig.ret, "output", 0))
            break
    else:
        for m in re.finditer(r"(?P<lit>-?\d+|'.')\s*(==|!=)", body):
            s = call.start() + m.start("lit")
            raw = m.group("lit")
            kind = "chr" if raw.startswith("'") else "num"
            out.append(Literal(raw, s, s + len(raw), _parse_literal(kind, raw), sig.ret, "output", 0))
            break
    if not any(l.role == "input" for l in out):
        raise NoEntryConstants("entry call has no literal arguments")
    if not any(l.role == "output" for l in out):
        raise NoEntryConstants("entry call has no literal expected output")
    return out
