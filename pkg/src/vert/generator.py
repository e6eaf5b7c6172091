"""Candidate generation: prompt rendering, backends, code extraction, safety filter."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .config import BackendConfig
from .errors import BackendUnavailable, FixtureExhausted
from .harness import format_value

log = logging.getLogger(__name__)

REFACTOR_LINE = "Safe Rust refactoring of above code in {language}, with code only, no comments."
SIGNATURE_LINE = "Use the same function name, same argument and return types."
SELF_CONTAINED_LINE = "Make sure the output program can compile on its own."
EQUIVALENCE_LINE = "Test that outputs from inputs {counter_examples} are equivalent to source program."


# -- prompts -------------------------------------------------------------

@dataclass
class Prompt:
    original_code: str
    language_label: str
    counterexamples: list[tuple] = field(default_factory=list)
    rendered: str = ""


def format_counterexample(values: tuple | list) -> str:
    """One input tuple: ``-5`` for a single slot, ``(1, "ab")`` otherwise."""
    parts = [v if isinstance(v, Literal) else format_value(v) for v in values]
    return parts[0] if len(parts) == 1 else "(" + ", ".join(parts) + ")"


class Literal(str):
    """A value already rendered as a literal; format_counterexample keeps it verbatim."""


def render_prompt(source: str, counterexamples: list | None = None, language: str = "C") -> Prompt:
    if not source.strip():
        raise ValueError("empty source text")
    ces = [tuple(c) for c in counterexamples or []]
    lines = [source.rstrip("\n"), REFACTOR_LINE.format(language=language), SIGNATURE_LINE, SELF_CONTAINED_LINE]
    if ces:
        lines.append(EQUIVALENCE_LINE.format(counter_examples=", ".join(format_counterexample(c) for c in ces)))
    return Prompt(source, language, ces, "\n".join(lines) + "\n")


# -- extraction and safety -------------------------------------------------

_FENCE = re.compile(r"^[ \t]*```[^\n`]*\n(.*?)^[ \t]*```", re.S | re.M)


def mask_comments_and_literals(text: str) -> str:
    """Blank out comments, string and char literals (newlines kept)."""
    out = []
    i, n = 0, len(text)

    def blank(s: str) -> str:
        return re.sub(r"[^\n]", " ", s)
    while i < n:
        c = text[i]
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            out.append(blank(text[i:j]))
            i = j
        elif text.startswith("/*", i):
            depth, j = 1, i + 2
            while j < n and depth:
                if text.startswith("/*", j):
                    depth, j = depth + 1, j + 2
                elif text.startswith("*/", j):
                    depth, j = depth - 1, j + 2
                else:
                    j += 1
            out.append(blank(text[i:j]))
            i = j
        elif (m := re.compile(r'b?r(#*)"').match(text, i)) and (i == 0 or not (text[i - 1].isalnum() or text[i - 1] == "_")):
            end = text.find('"' + m.group(1), m.end())
            j = n if end < 0 else end + 1 + len(m.group(1))
            out.append(blank(text[i:j]))
            i = j
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            out.append(blank(text[i:j + 1]))
            i = j + 1
        elif c == "'":
            m = re.compile(r"'(?:\\(?:x[0-9a-fA-F]{2}|u\{[0-9a-fA-F]+\}|.)|[^\\'\n])'").match(text, i)
            if m:
                out.append(blank(m.group(0)))
                i = m.end()
            else:  # lifetime or label
                out.append(c)
                i += 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


def is_safe(candidate: str) -> bool:
    """False if the ``unsafe`` keyword appears outside comments and literals."""
    return re.search(r"(?<![\w])unsafe(?![\w])", mask_comments_and_literals(candidate)) is None


_CODE_START = re.compile(r"^\s*(?:fn|pub|use|struct|enum|impl|trait|const|static|type|mod|let|where|#|//|/\*|\}|\{)")
_CODE_CHARS = re.compile(r"[{}();=\[\]]")


def _code_like(line: str) -> bool:
    s = line.strip()
    return not s or bool(_CODE_START.match(line)) or bool(_CODE_CHARS.search(s) and not re.search(r"[.:!?]$", s))


def extract_code_block(raw: str) -> str:
    """First fenced block; else the longest brace-balanced run of code lines; else ''."""
    m = _FENCE.search(raw)
    if m:
        return m.group(1).rstrip("\n")
    lines = raw.splitlines()
    masked = mask_comments_and_literals(raw).splitlines()
    best: tuple[int, int] = (0, 0)
    i = 0
    while i < len(lines):
        if not _code_like(lines[i]) or not lines[i].strip():
            i += 1
            continue
        depth, opened, j = 0, False, i
        end = None
        # inside an open brace every line belongs to the item
        while j < len(lines) and (depth > 0 or _code_like(lines[j])):
            for ch in masked[j]:
                if ch == "{":
                    depth, opened = depth + 1, True
                elif ch == "}":
                    depth -= 1
            if depth < 0:
                break
            if depth == 0 and opened:
                end = j + 1
            j += 1
        if end is not None and end - i > best[1] - best[0]:
            best = (i, end)
        i += 1
    return "\n".join(lines[best[0]:best[1]]).strip("\n")


# -- backends ------------------------------------------------------------

class Backend(Protocol):
    def __call__(self, prompt: str, program_id: str, attempt: int) -> str: ...


@dataclass
class CandidateResponse:
    raw: str
    extracted: str
    safe: bool


class ScriptedBackend:
    """Candidates read from ``<dir>/<program-id>/attempt-<n>.<ext>``."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.prompts: list[tuple[str, int, str]] = []

    def __call__(self, prompt: str, program_id: str, attempt: int) -> str:
        self.prompts.append((program_id, attempt, prompt))
        hits = sorted((self.directory / program_id).glob(f"attempt-{attempt}.*"))
        if not hits:
            raise FixtureExhausted(f"no scripted candidate {program_id}/attempt-{attempt}")
        return hits[0].read_text()


def _redact(text: str, secret: str | None) -> str:
    return text.replace(secret, "***") if secret else text


class RemoteBackend:
    """JSON completion endpoint; retries transport failures."""

    def __init__(self, cfg: BackendConfig, post: Callable | None = None):
        if not cfg.endpoint:
            raise BackendUnavailable("remote backend needs an endpoint")
        self.cfg = cfg
        self._post = post
        self._lock = threading.Lock()

    def _send(self, url: str, body: dict, headers: dict, timeout: float):
        if self._post is not None:
            return self._post(url, body, headers, timeout)
        import requests
        r = requests.post(url, json=body, headers=headers, timeout=timeout)
        if r.status_code >= 500:
            raise ConnectionError(f"server error {r.status_code}")
        if r.status_code >= 400:
            raise BackendUnavailable(f"endpoint rejected the request: {r.status_code} {r.text[:200]}")
        return r.json()

    def __call__(self, prompt: str, program_id: str, attempt: int) -> str:
        secret = os.environ.get(self.cfg.credential_env)
        headers = {"Content-Type": "application/json"}
        if secret:
            headers["Authorization"] = f"Bearer {secret}"
        body = {"model": self.cfg.model, "prompt": prompt, "temperature": self.cfg.temperature,
                "max_tokens": self.cfg.max_tokens}
        log.debug("request %s headers=%s body=%s", self.cfg.endpoint,
                  {k: ("***" if k == "Authorization" else v) for k, v in headers.items()}, json.dumps(body))
        last: Exception | None = None
        with self._lock:
            for n in range(1 + self.cfg.retries):
                try:
                    data = self._send(self.cfg.endpoint, body, headers, self.cfg.request_timeout)
                    text = response_text(data)
                    log.debug("response %s", _redact(json.dumps(data)[:4000], secret))
                    return text
                except BackendUnavailable:
                    raise
                except (ConnectionError, TimeoutError, OSError) as e:
                    last = e
                    log.warning("transport error (try %d): %s", n + 1, _redact(str(e), secret))
                    time.sleep(min(0.5 * 2 ** n, 4.0))
                except Exception as e:  # requests' own transport errors
                    if type(e).__module__.startswith(("requests", "urllib3")):
                        last = e
                        log.warning("transport error (try %d): %s", n + 1, _redact(str(e), secret))
                        time.sleep(min(0.5 * 2 ** n, 4.0))
                        continue
                    raise
        raise BackendUnavailable(f"endpoint unreachable after {1 + self.cfg.retries} tries: {last}")


def response_text(data) -> str:
    """Completion text from the common JSON response shapes."""
    if isinstance(data, str):
        return data
    if "choices" in data and data["choices"]:
        ch = data["choices"][0]
        if "message" in ch:
            return ch["message"].get("content") or ""
        return ch.get("text", "")
    if "content" in data and isinstance(data["content"], list):
        return "".join(part.get("text", "") for part in data["content"])
    for key in ("completion", "text", "output", "response"):
        if key in data:
            return data[key]
    raise BackendUnavailable("unrecognised response shape")


def make_backend(cfg: BackendConfig) -> Backend:
    if cfg.kind == "scripted":
        if not cfg.fixtures:
            raise BackendUnavailable("scripted backend needs a fixtures directory")
        return ScriptedBackend(cfg.fixtures)
    if cfg.kind == "remote":
        return RemoteBackend(cfg)
    raise BackendUnavailable(f"unknown backend {cfg.kind!r}")


def generate_candidate(prompt: Prompt, backend: Backend, program_id: str = "program",
                       attempt: int = 1) -> CandidateResponse:
    raw = backend(prompt.rendered, program_id, attempt)
    extracted = extract_code_block(raw)
    return CandidateResponse(raw, extracted, is_safe(extracted))
