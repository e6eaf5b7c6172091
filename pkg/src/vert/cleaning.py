"""Source cleaning and top-level function splitting by brace-depth scanning."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnbalancedDelimiters

LANGUAGES = ("C", "CPP", "Go")

_BLOCK_HEADS = re.compile(r"^\s*(?:namespace\b|extern\s*\"C\")")
_IDENT_BEFORE_PAREN = re.compile(r"([A-Za-z_][A-Za-z0-9_:~]*)\s*\($")


@dataclass
class FunctionUnit:
    name: str
    text: str
    start: int  # offset into the original text
    end: int


def normalize_language(language: str) -> str:
    key = language.strip().lower()
    table = {"c": "C", "cpp": "CPP", "c++": "CPP", "cxx": "CPP", "go": "Go", "golang": "Go"}
    if key not in table:
        raise ValueError(f"unsupported language: {language}")
    return table[key]


def _skip_literal(text: str, i: int, language: str) -> int:
    """If a comment or literal starts at i, return the index just past it."""
    c = text[i]
    nxt = text[i + 1] if i + 1 < len(text) else ""
    if c == "/" and nxt == "/":
        j = text.find("\n", i)
        return len(text) if j < 0 else j
    if c == "/" and nxt == "*":
        j = text.find("*/", i + 2)
        if j < 0:
            raise UnbalancedDelimiters("unterminated block comment")
        return j + 2
    if c == "`" and language == "Go":
        j = text.find("`", i + 1)
        if j < 0:
            raise UnbalancedDelimiters("unterminated raw string")
        return j + 1
    if c in "\"'":
        j = i + 1
        while j < len(text):
            if text[j] == "\\":
                j += 2
                continue
            if text[j] == c:
                return j + 1
            if text[j] == "\n":
                break
            j += 1
        raise UnbalancedDelimiters(f"unterminated literal at offset {i}")
    return i


def _items(text: str, language: str):
    """Yield (start, end, brace_open) for each top-level item.

    An item ends at a depth-0 ';' or at the '}' closing a depth-0 block
    (absorbing a directly following ';' as in C struct definitions).
    Preprocessor lines form their own items.
    """
    i = 0
    n = len(text)
    start = None
    brace_open = None
    depth = 0
    stack: list[str] = []
    pairs = {")": "(", "]": "[", "}": "{"}
    while i < n:
        if start is None:
            if text[i].isspace():
                i += 1
                continue
            if text.startswith("//", i) or text.startswith("/*", i):
                i = _skip_literal(text, i, language)
                continue
            start, brace_open = i, None
            if text[i] == "#" and language in ("C", "CPP"):
                j = i
                while True:
                    k = text.find("\n", j)
                    if k < 0:
                        k = n
                        break
                    if text[k - 1] == "\\":
                        j = k + 1
                        continue
                    break
                yield start, k, None
                start = None
                i = k
                continue
        j = _skip_literal(text, i, language)
        if j != i:
            i = j
            continue
        c = text[i]
        if c in "([{":
            if c == "{" and depth == 0 and brace_open is None:
                brace_open = i
            stack.append(c)
            depth += 1
        elif c in ")]}":
            if not stack or stack[-1] != pairs[c]:
                raise UnbalancedDelimiters(f"unexpected {c!r} at offset {i}")
            stack.pop()
            depth -= 1
            if c == "}" and depth == 0:
                k = i + 1
                while k < n and text[k] in " \t":
                    k += 1
                if k < n and text[k] == ";":
                    yield start, k + 1, brace_open
                    start = None
                    i = k + 1
                    continue
                if language == "Go" or _looks_like_function(text[start:brace_open]) or \
                        _BLOCK_HEADS.match(_strip_comments(text[start:brace_open])):
                    yield start, i + 1, brace_open
                    start = None
                    i += 1
                    continue
        elif c == ";" and depth == 0:
            yield start, i + 1, brace_open
            start = None
        i += 1
    if stack:
        raise UnbalancedDelimiters(f"unclosed {stack[-1]!r}")
    if start is not None and text[start:].strip():
        yield start, n, brace_open


_TRAILING_QUALIFIERS = re.compile(r"(?:\s*(?:const|noexcept|override|final|volatile|&&|&|->\s*[\w:<>,\s\*&]+))*\s*$")


def _looks_like_function(header: str) -> bool:
    """A function header ends with its parameter list (or a C++ initializer)."""
    h = _strip_comments(header).strip()
    if not h or "(" not in h or "=" in h.split("(")[0]:
        return False
    if re.match(r"(?:struct|class|union|enum|namespace)\s+[\w:]+\s*(?::[^(]*)?$", h):
        return False
    h = _TRAILING_QUALIFIERS.sub("", h)
    return h.endswith(")")


def _strip_comments(s: str) -> str:
    s = re.sub(r"/\*.*?\*/", " ", s, flags=re.S)
    return re.sub(r"//[^\n]*", " ", s)


def _function_name(header: str, language: str) -> str | None:
    h = _strip_comments(header)
    if language == "Go":
        m = re.match(r"\s*func\s+(?:\([^)]*\)\s*)?([A-Za-z_][A-Za-z0-9_]*)", h)
        return m.group(1) if m else None
    depth = 0
    # the name precedes the first '(' at paren depth 0
    for idx, ch in enumerate(h):
        if ch == "(":
            m = _IDENT_BEFORE_PAREN.search(h[:idx + 1])
            return m.group(1).split("::")[-1] if m else None
    return None


def clean_and_split(text: str, language: str) -> list[FunctionUnit]:
    language = normalize_language(language)
    units = []
    for start, end, brace in _items(text, language):
        if brace is None:
            continue
        header = text[start:brace]
        if language == "Go":
            # Go has no ';' after package/import lines: start at the last func keyword
            heads = [m.start(1) for m in re.finditer(r"(?:^|\n)[ \t]*(func)\b", header)]
            if not heads or "func" not in _strip_comments(header[heads[-1]:])[:4]:
                continue
            start += heads[-1]
            header = text[start:brace]
        elif not _looks_like_function(header):
            continue
        name = _function_name(header, language)
        if name:
            units.append(FunctionUnit(name, text[start:end], start, end))
    return units


def remainder(text: str, units: list[FunctionUnit]) -> str:
    """Text outside every unit, in order."""
    out = []
    pos = 0
    for u in sorted(units, key=lambda u: u.start):
        out.append(text[pos:u.start])
        pos = u.end
    out.append(text[pos:])
    return "".join(out)


def strip_includes(text: str, language: str) -> str:
    """Drop preprocessor includes (C/C++) or import blocks (Go)."""
    language = normalize_language(language)
    if language == "Go":
        text = re.sub(r"^\s*import\s*\([^)]*\)\s*$", "", text, flags=re.M)
        return re.sub(r"^\s*import\s+\"[^\"]*\"\s*$", "", text, flags=re.M)
    return re.sub(r"^[ \t]*#[ \t]*include\b[^\n]*$", "", text, flags=re.M)


def clean_source(text: str, language: str, drop: tuple[str, ...] = ("main",)) -> tuple[list[FunctionUnit], str]:
    """Split, then drop ``main`` and includes; returns kept units and the
    cleaned translation unit text."""
    units = clean_and_split(text, language)
    kept = [u for u in units if u.name not in drop]
    pieces = []
    pos = 0
    for u in units:
        pieces.append(text[pos:u.start])
        if u in kept:
            pieces.append(u.text)
        pos = u.end
    pieces.append(text[pos:])
    return kept, strip_includes("".join(pieces), language)
